//! Minimal reverse-mode autodiff tape over [`Matrix`] values.

use super::Matrix;

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// Broadcast a 1×n row over every row.
    AddRow(NodeId, NodeId),
    Mul(NodeId, NodeId),
    MulConst(NodeId, Matrix),
    Scale(NodeId, f64),
    AddConst(NodeId),
    Silu(NodeId),
    Abs(NodeId),
    Transpose(NodeId),
    SliceCols(NodeId, usize),
    SliceRows(NodeId, usize),
    ConcatCols(Vec<NodeId>),
    ConcatRows(Vec<NodeId>),
    /// Row-wise softmax with entries above the diagonal masked out.
    CausalSoftmax(NodeId),
    Softmax(NodeId),
    /// Rows of an embedding table picked by token id.
    Gather(NodeId, Vec<usize>),
    /// Sum of the listed entries (flat indices) as a 1×1 value.
    SumAt(NodeId, Vec<usize>),
    Sum(NodeId),
}

struct Node {
    value: Matrix,
    op: Op,
}

/// A recorded computation. Leaves are inputs or parameters; call
/// [`Graph::backward`] on a 1×1 node to get gradients for every node.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: Vec<(String, NodeId)>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id].value
    }

    pub fn input(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// A named leaf whose gradient is reported by [`Gradients::param`].
    pub fn param(&mut self, name: &str, value: Matrix) -> NodeId {
        let id = self.push(value, Op::Leaf);
        self.params.push((name.to_string(), id));
        id
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let r = self.value(row);
        assert_eq!(r.rows, 1, "add_row needs a row vector");
        let mut v = self.value(a).clone();
        for i in 0..v.rows {
            for j in 0..v.cols {
                v.data[i * v.cols + j] += r.data[j];
            }
        }
        self.push(v, Op::AddRow(a, row))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!((x.rows, x.cols), (y.rows, y.cols), "mul shape mismatch");
        let v = Matrix::from_vec(x.rows, x.cols, x.data.iter().zip(&y.data).map(|(p, q)| p * q).collect());
        self.push(v, Op::Mul(a, b))
    }

    pub fn mul_const(&mut self, a: NodeId, mask: Matrix) -> NodeId {
        let x = self.value(a);
        assert_eq!((x.rows, x.cols), (mask.rows, mask.cols), "mask shape mismatch");
        let v = Matrix::from_vec(x.rows, x.cols, x.data.iter().zip(&mask.data).map(|(p, q)| p * q).collect());
        self.push(v, Op::MulConst(a, mask))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let v = self.value(a).scaled(s);
        self.push(v, Op::Scale(a, s))
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.value(a).map(|x| x + c);
        self.push(v, Op::AddConst(a))
    }

    pub fn silu(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(|x| x / (1.0 + (-x).exp()));
        self.push(v, Op::Silu(a))
    }

    pub fn abs(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).map(f64::abs);
        self.push(v, Op::Abs(a))
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).transpose();
        self.push(v, Op::Transpose(a))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(a).cols_range(start, len);
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let v = self.value(a).rows_range(start, len);
        self.push(v, Op::SliceRows(a, start))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> NodeId {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|p| self.value(*p).cols).sum();
        let mut v = Matrix::zeros(rows, cols);
        let mut off = 0;
        for p in parts {
            let m = self.value(*p);
            assert_eq!(m.rows, rows, "concat_cols row mismatch");
            for r in 0..rows {
                v.data[r * cols + off..r * cols + off + m.cols].copy_from_slice(m.row(r));
            }
            off += m.cols;
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        let cols = self.value(parts[0]).cols;
        let mut data = Vec::new();
        for p in parts {
            let m = self.value(*p);
            assert_eq!(m.cols, cols, "concat_rows column mismatch");
            data.extend_from_slice(&m.data);
        }
        let rows = data.len() / cols.max(1);
        self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(parts.to_vec()))
    }

    fn softmax_rows(m: &Matrix, causal: bool) -> Matrix {
        let mut v = Matrix::zeros(m.rows, m.cols);
        for r in 0..m.rows {
            let width = if causal { (r + 1).min(m.cols) } else { m.cols };
            let row = &m.data[r * m.cols..r * m.cols + width];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            for (out, x) in v.data[r * m.cols..r * m.cols + width].iter_mut().zip(row) {
                *out = (x - max).exp() / z;
            }
        }
        v
    }

    pub fn causal_softmax(&mut self, a: NodeId) -> NodeId {
        let v = Graph::softmax_rows(self.value(a), true);
        self.push(v, Op::CausalSoftmax(a))
    }

    pub fn softmax(&mut self, a: NodeId) -> NodeId {
        let v = Graph::softmax_rows(self.value(a), false);
        self.push(v, Op::Softmax(a))
    }

    pub fn gather(&mut self, table: NodeId, ids: &[usize]) -> NodeId {
        let v = self.value(table).select_rows(ids);
        self.push(v, Op::Gather(table, ids.to_vec()))
    }

    pub fn sum_at(&mut self, a: NodeId, idx: &[usize]) -> NodeId {
        let x = self.value(a);
        let s = idx.iter().map(|i| x.data[*i]).sum();
        self.push(Matrix::from_vec(1, 1, vec![s]), Op::SumAt(a, idx.to_vec()))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.value(a).data.iter().sum();
        self.push(Matrix::from_vec(1, 1, vec![s]), Op::Sum(a))
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.len(), 1, "not a scalar node");
        v.data[0]
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, out: NodeId) -> Gradients {
        assert_eq!(self.value(out).len(), 1, "backward starts from a scalar");
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out] = Some(Matrix::from_vec(1, 1, vec![1.0]));
        fn acc(grads: &mut [Option<Matrix>], id: NodeId, g: Matrix) {
            match &mut grads[id] {
                Some(existing) => existing.add_assign(&g),
                slot => *slot = Some(g),
            }
        }
        for id in (0..=out).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {
                    grads[id] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(&mut grads, *a, g.matmul(&bv.transpose()));
                    acc(&mut grads, *b, av.transpose().matmul(&g));
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow(a, row) => {
                    let mut rg = Matrix::zeros(1, g.cols);
                    for r in 0..g.rows {
                        for c in 0..g.cols {
                            rg.data[c] += g.get(r, c);
                        }
                    }
                    acc(&mut grads, *row, rg);
                    acc(&mut grads, *a, g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = Matrix::from_vec(g.rows, g.cols, g.data.iter().zip(&bv.data).map(|(x, y)| x * y).collect());
                    let gb = Matrix::from_vec(g.rows, g.cols, g.data.iter().zip(&av.data).map(|(x, y)| x * y).collect());
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MulConst(a, mask) => {
                    let ga = Matrix::from_vec(g.rows, g.cols, g.data.iter().zip(&mask.data).map(|(x, y)| x * y).collect());
                    acc(&mut grads, *a, ga);
                }
                Op::Scale(a, s) => acc(&mut grads, *a, g.scaled(*s)),
                Op::AddConst(a) => acc(&mut grads, *a, g),
                Op::Silu(a) => {
                    let x = self.value(*a);
                    let d = Matrix::from_vec(
                        g.rows,
                        g.cols,
                        g.data
                            .iter()
                            .zip(&x.data)
                            .map(|(gi, xi)| {
                                let s = 1.0 / (1.0 + (-xi).exp());
                                gi * (s + xi * s * (1.0 - s))
                            })
                            .collect(),
                    );
                    acc(&mut grads, *a, d);
                }
                Op::Abs(a) => {
                    let x = self.value(*a);
                    let d = Matrix::from_vec(
                        g.rows,
                        g.cols,
                        g.data.iter().zip(&x.data).map(|(gi, xi)| if *xi > 0.0 { *gi } else if *xi < 0.0 { -gi } else { 0.0 }).collect(),
                    );
                    acc(&mut grads, *a, d);
                }
                Op::Transpose(a) => acc(&mut grads, *a, g.transpose()),
                Op::SliceCols(a, start) => {
                    let src = self.value(*a);
                    let mut d = Matrix::zeros(src.rows, src.cols);
                    for r in 0..g.rows {
                        for c in 0..g.cols {
                            d.set(r, start + c, g.get(r, c));
                        }
                    }
                    acc(&mut grads, *a, d);
                }
                Op::SliceRows(a, start) => {
                    let src = self.value(*a);
                    let mut d = Matrix::zeros(src.rows, src.cols);
                    d.data[start * src.cols..start * src.cols + g.len()].copy_from_slice(&g.data);
                    acc(&mut grads, *a, d);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = self.value(*p).cols;
                        acc(&mut grads, *p, g.cols_range(off, w));
                        off += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let h = self.value(*p).rows;
                        acc(&mut grads, *p, g.rows_range(off, h));
                        off += h;
                    }
                }
                Op::CausalSoftmax(a) | Op::Softmax(a) => {
                    let y = &node.value;
                    let mut d = Matrix::zeros(y.rows, y.cols);
                    for r in 0..y.rows {
                        let dot: f64 = (0..y.cols).map(|c| g.get(r, c) * y.get(r, c)).sum();
                        for c in 0..y.cols {
                            d.set(r, c, y.get(r, c) * (g.get(r, c) - dot));
                        }
                    }
                    acc(&mut grads, *a, d);
                }
                Op::Gather(table, ids) => {
                    let t = self.value(*table);
                    let mut d = Matrix::zeros(t.rows, t.cols);
                    for (i, id) in ids.iter().enumerate() {
                        for c in 0..t.cols {
                            d.data[id * t.cols + c] += g.get(i, c);
                        }
                    }
                    acc(&mut grads, *table, d);
                }
                Op::SumAt(a, idx) => {
                    let src = self.value(*a);
                    let mut d = Matrix::zeros(src.rows, src.cols);
                    for i in idx {
                        d.data[*i] += g.data[0];
                    }
                    acc(&mut grads, *a, d);
                }
                Op::Sum(a) => {
                    let src = self.value(*a);
                    acc(&mut grads, *a, Matrix::from_vec(src.rows, src.cols, vec![g.data[0]; src.len()]));
                }
            }
        }
        let params = self
            .params
            .iter()
            .map(|(name, id)| {
                let v = self.value(*id);
                (name.clone(), grads[*id].clone().unwrap_or_else(|| Matrix::zeros(v.rows, v.cols)))
            })
            .collect();
        Gradients { params }
    }
}

/// Gradients of the named parameters of a graph.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    params: Vec<(String, Matrix)>,
}

impl Gradients {
    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.params.iter().map(|(n, g)| (n.as_str(), g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(f: impl Fn(&Matrix) -> f64, x: &Matrix) -> Matrix {
        let h = 1e-6;
        Matrix::from_fn(x.rows, x.cols, |r, c| {
            let mut p = x.clone();
            p.set(r, c, x.get(r, c) + h);
            let mut m = x.clone();
            m.set(r, c, x.get(r, c) - h);
            (f(&p) - f(&m)) / (2.0 * h)
        })
    }

    fn build(x: &Matrix) -> (Graph, NodeId) {
        let mut g = Graph::new();
        let xi = g.param("x", x.clone());
        let w = g.input(Matrix::from_fn(3, 3, |r, c| 0.3 * r as f64 - 0.2 * c as f64 + 0.1));
        let h = g.matmul(xi, w);
        let h = g.silu(h);
        let t = g.transpose(h);
        let s = g.matmul(h, t);
        let s = g.causal_softmax(s);
        let z = g.matmul(s, h);
        let z = g.slice_cols(z, 1, 2);
        let last = g.slice_rows(z, 1, 1);
        let p = g.softmax(last);
        let q = g.sum_at(p, &[0]);
        let q = g.add_const(q, -0.5);
        let q = g.abs(q);
        (g, q)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = Matrix::from_fn(2, 3, |r, c| 0.5 - 0.4 * r as f64 + 0.25 * c as f64);
        let (g, out) = build(&x);
        let analytic = g.backward(out).param("x").unwrap().clone();
        let num = numeric(
            |m| {
                let (g, o) = build(m);
                g.scalar(o)
            },
            &x,
        );
        assert!(analytic.max_abs_diff(&num) < 1e-7, "{analytic:?} vs {num:?}");
    }
}
