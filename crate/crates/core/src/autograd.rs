//! A small reverse-mode automatic differentiation tape over row-major
//! matrices. Only the operations the seq2seq model needs are provided.

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating point element type of a tape.
pub trait Scalar:
    Float + AddAssign + SubAssign + MulAssign + Default + Debug + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data does not match shape");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    fn add_assign(&mut self, other: &Matrix<T>) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (x, y) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for k in chunks * 8..a.len() {
        tail += a[k] * b[k];
    }
    let s =
        ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    s + tail
}

#[inline]
fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (y, &x) in y.iter_mut().zip(x) {
        *y += alpha * x;
    }
}

/// out += a · b, with a: m×k, b: k×n.
fn gemm_acc<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    debug_assert_eq!(a.cols, b.rows);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (p, &av) in a.row(i).iter().enumerate() {
            if av != T::zero() {
                axpy(av, b.row(p), orow);
            }
        }
    }
}

/// out += a · bᵀ, with a: m×k, b: n×k.
fn gemm_bt_acc<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    debug_assert_eq!(a.cols, b.cols);
    for i in 0..a.rows {
        let arow = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] += dot(arow, b.row(j));
        }
    }
}

/// out += aᵀ · b, with a: m×k, b: m×n.
fn gemm_at_acc<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, out: &mut Matrix<T>) {
    debug_assert_eq!(a.rows, b.rows);
    for i in 0..a.rows {
        let brow = b.row(i);
        for (p, &av) in a.row(i).iter().enumerate() {
            if av != T::zero() {
                axpy(av, brow, &mut out.data[p * b.cols..(p + 1) * b.cols]);
            }
        }
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    /// a · bᵀ
    MatMulT(Var, Var),
    Add(Var, Var),
    /// Adds a 1×n row to every row.
    AddRow(Var, Var),
    Scale(Var, T),
    /// Elementwise product with a constant mask.
    Mask(Var, Vec<T>),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        rstd: Vec<T>,
    },
    /// Masked entries are zero in the output, so backward needs no mask.
    Softmax(Var),
    LogSoftmax(Var),
    Gather {
        table: Var,
        ids: Vec<usize>,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
    /// Mean negative log-likelihood of `targets`, skipping `ignore`.
    Nll {
        logp: Var,
        targets: Vec<usize>,
        ignore: Option<usize>,
    },
}

struct Node<T> {
    value: Matrix<T>,
    op: Op<T>,
}

pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&Matrix<T>> {
        self.grads[v.0].as_ref()
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix<T>, op: Op<T>) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    pub fn leaf(&mut self, value: Matrix<T>) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.cols, bv.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(av.rows, bv.cols);
        gemm_acc(av, bv, &mut out);
        self.push(out, Op::MatMul(a, b))
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.cols, bv.cols, "matmul_t shape mismatch");
        let mut out = Matrix::zeros(av.rows, bv.rows);
        gemm_bt_acc(av, bv, &mut out);
        self.push(out, Op::MatMulT(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b))
    }

    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let mut out = self.value(a).clone();
        let b = self.value(bias);
        assert_eq!((b.rows, b.cols), (1, out.cols), "bias must be 1×cols");
        for r in 0..out.rows {
            for (o, &bv) in out.row_mut(r).iter_mut().zip(&b.data) {
                *o += bv;
            }
        }
        self.push(out, Op::AddRow(a, bias))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        let mut out = self.value(a).clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        self.push(out, Op::Scale(a, s))
    }

    /// Multiplies `a` elementwise by a constant `mask` of the same size.
    pub fn mask(&mut self, a: Var, mask: Vec<T>) -> Var {
        let mut out = self.value(a).clone();
        assert_eq!(out.data.len(), mask.len(), "mask shape mismatch");
        out.data.iter_mut().zip(&mask).for_each(|(x, &m)| *x *= m);
        self.push(out, Op::Mask(a, mask))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        let c = T::from_f64(GELU_C);
        let k = T::from_f64(GELU_A);
        let half = T::from_f64(0.5);
        let mut out = self.value(a).clone();
        out.data.iter_mut().for_each(|x| {
            let u = c * (*x + k * *x * *x * *x);
            *x = half * *x * (T::one() + u.tanh());
        });
        self.push(out, Op::Gelu(a))
    }

    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: T) -> Var {
        let xv = self.value(x);
        let (g, b) = (self.value(gamma), self.value(beta));
        let (rows, cols) = (xv.rows, xv.cols);
        let n = T::from_f64(cols as f64);
        let mut xhat = vec![T::zero(); rows * cols];
        let mut rstd = vec![T::zero(); rows];
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let row = xv.row(r);
            let mean = row.iter().fold(T::zero(), |s, &v| s + v) / n;
            let var = row.iter().fold(T::zero(), |s, &v| s + (v - mean) * (v - mean)) / n;
            let rs = T::one() / (var + eps).sqrt();
            rstd[r] = rs;
            for c in 0..cols {
                let h = (row[c] - mean) * rs;
                xhat[r * cols + c] = h;
                out.data[r * cols + c] = h * g.data[c] + b.data[c];
            }
        }
        self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
        )
    }

    /// Row-wise softmax. With `causal`, entry (i, j) is masked out when j > i.
    pub fn softmax(&mut self, x: Var, causal: bool) -> Var {
        let mut out = self.value(x).clone();
        for r in 0..out.rows {
            let limit = if causal { (r + 1).min(out.cols) } else { out.cols };
            let row = out.row_mut(r);
            let max = row[..limit].iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            let mut sum = T::zero();
            for v in &mut row[..limit] {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in &mut row[..limit] {
                *v = *v / sum;
            }
            for v in &mut row[limit..] {
                *v = T::zero();
            }
        }
        self.push(out, Op::Softmax(x))
    }

    pub fn log_softmax(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        for r in 0..out.rows {
            let row = out.row_mut(r);
            let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
            let lse = row.iter().fold(T::zero(), |s, &v| s + (v - max).exp()).ln() + max;
            row.iter_mut().for_each(|v| *v -= lse);
        }
        self.push(out, Op::LogSoftmax(x))
    }

    /// Selects rows of `table`.
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Var {
        let t = self.value(table);
        let mut out = Matrix::zeros(ids.len(), t.cols);
        for (r, &id) in ids.iter().enumerate() {
            out.row_mut(r).copy_from_slice(t.row(id));
        }
        self.push(
            out,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
        )
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Var {
        let xv = self.value(x);
        assert!(start + width <= xv.cols, "column slice out of range");
        let mut out = Matrix::zeros(xv.rows, width);
        for r in 0..xv.rows {
            out.row_mut(r).copy_from_slice(&xv.row(r)[start..start + width]);
        }
        self.push(out, Op::SliceCols { x, start })
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows;
        let cols: usize = parts.iter().map(|&p| self.value(p).cols).sum();
        let mut out = Matrix::zeros(rows, cols);
        let mut offset = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.rows, rows, "concat row mismatch");
            for r in 0..rows {
                out.row_mut(r)[offset..offset + pv.cols].copy_from_slice(pv.row(r));
            }
            offset += pv.cols;
        }
        self.push(out, Op::ConcatCols(parts.to_vec()))
    }

    /// Mean of `-logp[t, targets[t]]` over positions whose target is not `ignore`.
    pub fn nll(&mut self, logp: Var, targets: &[usize], ignore: Option<usize>) -> Var {
        let lv = self.value(logp);
        assert_eq!(lv.rows, targets.len(), "nll target length mismatch");
        let mut sum = T::zero();
        let mut count = 0usize;
        for (t, &tok) in targets.iter().enumerate() {
            if Some(tok) == ignore {
                continue;
            }
            sum -= lv.get(t, tok);
            count += 1;
        }
        let mean = if count == 0 {
            T::zero()
        } else {
            sum / T::from_f64(count as f64)
        };
        self.push(
            Matrix::from_vec(1, 1, vec![mean]),
            Op::Nll {
                logp,
                targets: targets.to_vec(),
                ignore,
            },
        )
    }

    pub fn scalar(&self, v: Var) -> T {
        let m = self.value(v);
        assert_eq!(m.data.len(), 1, "not a scalar node");
        m.data[0]
    }

    /// Reverse sweep seeded with `d(output)/d(seed var) = weight` for each
    /// seed; seeds must be 1×1 nodes.
    pub fn backward(&self, seeds: &[(Var, T)]) -> Gradients<T> {
        let mut grads: Vec<Option<Matrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut top = 0;
        for &(v, w) in seeds {
            if w == T::zero() {
                continue;
            }
            let g = grads[v.0].get_or_insert_with(|| Matrix::zeros(1, 1));
            g.data[0] += w;
            top = top.max(v.0 + 1);
        }
        for i in (0..top).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Gradients { grads }
    }

    fn acc<'g>(
        &self,
        grads: &'g mut [Option<Matrix<T>>],
        v: Var,
    ) -> &'g mut Matrix<T> {
        let shape = &self.nodes[v.0].value;
        grads[v.0].get_or_insert_with(|| Matrix::zeros(shape.rows, shape.cols))
    }

    fn propagate(&self, node: &Node<T>, g: &Matrix<T>, grads: &mut [Option<Matrix<T>>]) {
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                gemm_bt_acc(g, bv, self.acc(grads, *a));
                gemm_at_acc(av, g, self.acc(grads, *b));
            }
            Op::MatMulT(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                gemm_acc(g, bv, self.acc(grads, *a));
                gemm_at_acc(g, av, self.acc(grads, *b));
            }
            Op::Add(a, b) => {
                self.acc(grads, *a).add_assign(g);
                self.acc(grads, *b).add_assign(g);
            }
            Op::AddRow(a, bias) => {
                self.acc(grads, *a).add_assign(g);
                let gb = self.acc(grads, *bias);
                for r in 0..g.rows {
                    for (o, &gv) in gb.data.iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::Scale(a, s) => {
                let ga = self.acc(grads, *a);
                for (o, &gv) in ga.data.iter_mut().zip(&g.data) {
                    *o += *s * gv;
                }
            }
            Op::Mask(a, mask) => {
                let ga = self.acc(grads, *a);
                for ((o, &gv), &m) in ga.data.iter_mut().zip(&g.data).zip(mask) {
                    *o += m * gv;
                }
            }
            Op::Gelu(a) => {
                let c = T::from_f64(GELU_C);
                let k = T::from_f64(GELU_A);
                let half = T::from_f64(0.5);
                let three = T::from_f64(3.0);
                let xs = &self.value(*a).data;
                let ga = self.acc(grads, *a);
                for ((o, &gv), &x) in ga.data.iter_mut().zip(&g.data).zip(xs) {
                    let u = c * (x + k * x * x * x);
                    let th = u.tanh();
                    let du = c * (T::one() + three * k * x * x);
                    let d = half * (T::one() + th) + half * x * (T::one() - th * th) * du;
                    *o += gv * d;
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            } => {
                let (rows, cols) = (g.rows, g.cols);
                let gam = &self.value(*gamma).data;
                {
                    let gg = self.acc(grads, *gamma);
                    for r in 0..rows {
                        for c in 0..cols {
                            gg.data[c] += g.data[r * cols + c] * xhat[r * cols + c];
                        }
                    }
                }
                {
                    let gbeta = self.acc(grads, *beta);
                    for r in 0..rows {
                        for (o, &gv) in gbeta.data.iter_mut().zip(g.row(r)) {
                            *o += gv;
                        }
                    }
                }
                let n = T::from_f64(cols as f64);
                let gx = self.acc(grads, *x);
                let mut dxhat = vec![T::zero(); cols];
                for r in 0..rows {
                    let mut sum_d = T::zero();
                    let mut sum_dx = T::zero();
                    for c in 0..cols {
                        let d = g.data[r * cols + c] * gam[c];
                        dxhat[c] = d;
                        sum_d += d;
                        sum_dx += d * xhat[r * cols + c];
                    }
                    for c in 0..cols {
                        let h = xhat[r * cols + c];
                        gx.data[r * cols + c] +=
                            rstd[r] / n * (n * dxhat[c] - sum_d - h * sum_dx);
                    }
                }
            }
            Op::Softmax(x) => {
                let y = &node.value;
                let gx = self.acc(grads, *x);
                for r in 0..y.rows {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let s = dot(yr, gr);
                    for ((o, &yv), &gv) in gx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o += yv * (gv - s);
                    }
                }
            }
            Op::LogSoftmax(x) => {
                let y = &node.value;
                let gx = self.acc(grads, *x);
                for r in 0..y.rows {
                    let (yr, gr) = (y.row(r), g.row(r));
                    let s = gr.iter().fold(T::zero(), |a, &b| a + b);
                    for ((o, &yv), &gv) in gx.row_mut(r).iter_mut().zip(yr).zip(gr) {
                        *o += gv - yv.exp() * s;
                    }
                }
            }
            Op::Gather { table, ids } => {
                let gt = self.acc(grads, *table);
                for (r, &id) in ids.iter().enumerate() {
                    for (o, &gv) in gt.row_mut(id).iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::SliceCols { x, start } => {
                let gx = self.acc(grads, *x);
                for r in 0..g.rows {
                    for (o, &gv) in gx.row_mut(r)[*start..*start + g.cols].iter_mut().zip(g.row(r)) {
                        *o += gv;
                    }
                }
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let width = self.value(p).cols;
                    let gp = self.acc(grads, p);
                    for r in 0..g.rows {
                        for (o, &gv) in gp.row_mut(r).iter_mut().zip(&g.row(r)[offset..offset + width]) {
                            *o += gv;
                        }
                    }
                    offset += width;
                }
            }
            Op::Nll {
                logp,
                targets,
                ignore,
            } => {
                let count = targets.iter().filter(|&&t| Some(t) != *ignore).count();
                if count == 0 {
                    return;
                }
                let w = g.data[0] / T::from_f64(count as f64);
                let gl = self.acc(grads, *logp);
                let cols = gl.cols;
                for (t, &tok) in targets.iter().enumerate() {
                    if Some(tok) != *ignore {
                        gl.data[t * cols + tok] -= w;
                    }
                }
            }
        }
    }
}
