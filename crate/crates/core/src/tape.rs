//! Minimal reverse-mode differentiation tape over [`Mat`] values.
//!
//! The training losses are built by pushing ops onto a [`Tape`]; values are
//! computed eagerly, and [`Tape::backward`] accumulates adjoints in reverse
//! creation order. The op set is exactly what the pipeline needs — no
//! broadcasting rules beyond a row-vector bias.
//!
//! Constants (adjacency matrices, targets) enter as ordinary leaves; their
//! gradients are computed and discarded, which is cheap at the scales this
//! crate works at.

use crate::mat::Mat;
use crate::nn;

/// Handle to a tape node.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    /// A·B
    MatMul(Var, Var),
    /// A·Bᵀ
    MatMulNT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Hadamard(Var, Var),
    /// row-vector bias broadcast over rows
    AddBias(Var, Var),
    Scale(Var, f64),
    /// row i scaled by factors[i]
    RowScale(Var, Vec<f64>),
    Tanh(Var),
    Sigmoid(Var),
    Abs(Var),
    /// all entries summed to 1×1
    Sum(Var),
    /// column means to 1×c
    MeanRows(Var),
    GatherRows(Var, Vec<usize>),
    ConcatCols(Var, Var),
    VStack(Var, Var),
    /// p×1 scores scattered into an n×n matrix at `coords`
    ScatterSquare {
        scores: Var,
        coords: Vec<(usize, usize)>,
        n: usize,
    },
    /// mean over rows of -w_y·log softmax(logits)_y
    SoftmaxCe {
        logits: Var,
        labels: Vec<usize>,
        class_weights: Option<Vec<f64>>,
    },
    /// mean over rows of the squared row distance to a constant target
    MseRows(Var, Mat),
    /// cosine similarity of two 1×d vectors, norms floored at 1e-12
    Cosine(Var, Var),
}

struct Node {
    op: Op,
    value: Mat,
}

/// Reverse-mode tape; rebuilt per training step.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

const NORM_FLOOR: f64 = 1e-12;

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, v: Var) -> f64 {
        let m = self.value(v);
        assert_eq!(m.shape(), (1, 1), "scalar() on non-scalar node");
        m.get(0, 0)
    }

    fn push(&mut self, op: Op, value: Mat) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Mat) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul_nt(self.value(b));
        self.push(Op::MatMulNT(a, b), v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).add(self.value(b));
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).sub(self.value(b));
        self.push(Op::Sub(a, b), v)
    }

    pub fn hadamard(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).hadamard(self.value(b));
        self.push(Op::Hadamard(a, b), v)
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(bias));
        assert_eq!(bv.rows(), 1, "bias must be a row vector");
        assert_eq!(bv.cols(), av.cols(), "bias width");
        let mut out = av.clone();
        for i in 0..out.rows() {
            for (o, &b) in out.row_mut(i).iter_mut().zip(bv.row(0)) {
                *o += b;
            }
        }
        self.push(Op::AddBias(a, bias), out)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).scale(s);
        self.push(Op::Scale(a, s), v)
    }

    pub fn row_scale(&mut self, a: Var, factors: &[f64]) -> Var {
        let av = self.value(a);
        assert_eq!(av.rows(), factors.len(), "row_scale factor count");
        let mut out = av.clone();
        for (i, &f) in factors.iter().enumerate() {
            for o in out.row_mut(i) {
                *o *= f;
            }
        }
        self.push(Op::RowScale(a, factors.to_vec()), out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = nn::tanh_mat(self.value(a));
        self.push(Op::Tanh(a), v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = nn::sigmoid_mat(self.value(a));
        self.push(Op::Sigmoid(a), v)
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::abs);
        self.push(Op::Abs(a), v)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Mat::filled(1, 1, self.value(a).sum());
        self.push(Op::Sum(a), v)
    }

    pub fn mean_rows(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let n = av.rows().max(1) as f64;
        let v = av.col_sums().scale(1.0 / n);
        self.push(Op::MeanRows(a), v)
    }

    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Var {
        let av = self.value(a);
        let mut out = Mat::zeros(rows.len(), av.cols());
        for (i, &r) in rows.iter().enumerate() {
            out.row_mut(i).copy_from_slice(av.row(r));
        }
        self.push(Op::GatherRows(a, rows.to_vec()), out)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.rows(), bv.rows(), "concat_cols rows");
        let mut out = Mat::zeros(av.rows(), av.cols() + bv.cols());
        for i in 0..av.rows() {
            out.row_mut(i)[..av.cols()].copy_from_slice(av.row(i));
            out.row_mut(i)[av.cols()..].copy_from_slice(bv.row(i));
        }
        self.push(Op::ConcatCols(a, b), out)
    }

    pub fn vstack(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.cols(), bv.cols(), "vstack cols");
        let mut out = Mat::zeros(av.rows() + bv.rows(), av.cols());
        for i in 0..av.rows() {
            out.row_mut(i).copy_from_slice(av.row(i));
        }
        for i in 0..bv.rows() {
            out.row_mut(av.rows() + i).copy_from_slice(bv.row(i));
        }
        self.push(Op::VStack(a, b), out)
    }

    pub fn scatter_square(&mut self, scores: Var, coords: &[(usize, usize)], n: usize) -> Var {
        let sv = self.value(scores);
        assert_eq!(sv.cols(), 1, "scatter_square takes a column of scores");
        assert_eq!(sv.rows(), coords.len(), "scatter_square coord count");
        let mut out = Mat::zeros(n, n);
        for (p, &(i, j)) in coords.iter().enumerate() {
            out.add_at(i, j, sv.get(p, 0));
        }
        self.push(
            Op::ScatterSquare {
                scores,
                coords: coords.to_vec(),
                n,
            },
            out,
        )
    }

    pub fn softmax_ce(
        &mut self,
        logits: Var,
        labels: &[usize],
        class_weights: Option<&[f64]>,
    ) -> Var {
        let (loss, _) = nn::softmax_cross_entropy(self.value(logits), labels, class_weights)
            .expect("softmax_ce inputs validated by caller");
        self.push(
            Op::SoftmaxCe {
                logits,
                labels: labels.to_vec(),
                class_weights: class_weights.map(|w| w.to_vec()),
            },
            Mat::filled(1, 1, loss),
        )
    }

    pub fn mse_rows(&mut self, pred: Var, target: &Mat) -> Var {
        let pv = self.value(pred);
        assert!(pv.same_shape(target), "mse_rows shapes");
        let n = pv.rows().max(1) as f64;
        let loss = pv.sub(target).frob_norm_sq() / n;
        self.push(Op::MseRows(pred, target.clone()), Mat::filled(1, 1, loss))
    }

    pub fn cosine(&mut self, a: Var, b: Var) -> Var {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.rows(), 1, "cosine takes row vectors");
        assert!(av.same_shape(bv), "cosine shapes");
        let na = av.frob_norm_sq().sqrt().max(NORM_FLOOR);
        let nb = bv.frob_norm_sq().sqrt().max(NORM_FLOOR);
        let dot: f64 = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).sum();
        self.push(Op::Cosine(a, b), Mat::filled(1, 1, dot / (na * nb)))
    }

    /// Adjoints for every node, seeded with `d loss/d loss = 1`.
    /// `loss` must be 1×1.
    pub fn backward(&self, loss: Var) -> Grads {
        assert_eq!(self.value(loss).shape(), (1, 1), "loss must be scalar");
        let mut grads: Vec<Mat> = self
            .nodes
            .iter()
            .map(|n| Mat::zeros(n.value.rows(), n.value.cols()))
            .collect();
        grads[loss.0].set(0, 0, 1.0);

        for idx in (0..self.nodes.len()).rev() {
            let g = grads[idx].clone();
            if g.frob_norm_sq() == 0.0 {
                continue;
            }
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul_nt(&self.nodes[b.0].value);
                    let db = self.nodes[a.0].value.matmul_tn(&g);
                    grads[a.0].add_assign(&da);
                    grads[b.0].add_assign(&db);
                }
                Op::MatMulNT(a, b) => {
                    let da = g.matmul(&self.nodes[b.0].value);
                    let db = g.matmul_tn(&self.nodes[a.0].value);
                    grads[a.0].add_assign(&da);
                    grads[b.0].add_assign(&db);
                }
                Op::Add(a, b) => {
                    grads[a.0].add_assign(&g);
                    grads[b.0].add_assign(&g);
                }
                Op::Sub(a, b) => {
                    grads[a.0].add_assign(&g);
                    grads[b.0].add_assign_scaled(&g, -1.0);
                }
                Op::Hadamard(a, b) => {
                    let da = g.hadamard(&self.nodes[b.0].value);
                    let db = g.hadamard(&self.nodes[a.0].value);
                    grads[a.0].add_assign(&da);
                    grads[b.0].add_assign(&db);
                }
                Op::AddBias(a, bias) => {
                    grads[a.0].add_assign(&g);
                    grads[bias.0].add_assign(&g.col_sums());
                }
                Op::Scale(a, s) => {
                    grads[a.0].add_assign_scaled(&g, *s);
                }
                Op::RowScale(a, factors) => {
                    let mut da = g.clone();
                    for (i, &f) in factors.iter().enumerate() {
                        for v in da.row_mut(i) {
                            *v *= f;
                        }
                    }
                    grads[a.0].add_assign(&da);
                }
                Op::Tanh(a) => {
                    let da = nn::tanh_backward(&self.nodes[idx].value, &g);
                    grads[a.0].add_assign(&da);
                }
                Op::Sigmoid(a) => {
                    let da = nn::sigmoid_backward(&self.nodes[idx].value, &g);
                    grads[a.0].add_assign(&da);
                }
                Op::Abs(a) => {
                    let sign = self.nodes[a.0].value.map(|v| {
                        if v > 0.0 {
                            1.0
                        } else if v < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    });
                    grads[a.0].add_assign(&g.hadamard(&sign));
                }
                Op::Sum(a) => {
                    let s = g.get(0, 0);
                    let shape = self.nodes[a.0].value.shape();
                    grads[a.0].add_assign(&Mat::filled(shape.0, shape.1, s));
                }
                Op::MeanRows(a) => {
                    let shape = self.nodes[a.0].value.shape();
                    let inv_n = 1.0 / shape.0.max(1) as f64;
                    let mut da = Mat::zeros(shape.0, shape.1);
                    for i in 0..shape.0 {
                        for (v, &gc) in da.row_mut(i).iter_mut().zip(g.row(0)) {
                            *v = gc * inv_n;
                        }
                    }
                    grads[a.0].add_assign(&da);
                }
                Op::GatherRows(a, rows) => {
                    let mut da = Mat::zeros(
                        self.nodes[a.0].value.rows(),
                        self.nodes[a.0].value.cols(),
                    );
                    for (i, &r) in rows.iter().enumerate() {
                        for (j, &gv) in g.row(i).iter().enumerate() {
                            da.add_at(r, j, gv);
                        }
                    }
                    grads[a.0].add_assign(&da);
                }
                Op::ConcatCols(a, b) => {
                    let ac = self.nodes[a.0].value.cols();
                    let mut da = Mat::zeros(g.rows(), ac);
                    let mut db = Mat::zeros(g.rows(), g.cols() - ac);
                    for i in 0..g.rows() {
                        da.row_mut(i).copy_from_slice(&g.row(i)[..ac]);
                        db.row_mut(i).copy_from_slice(&g.row(i)[ac..]);
                    }
                    grads[a.0].add_assign(&da);
                    grads[b.0].add_assign(&db);
                }
                Op::VStack(a, b) => {
                    let ar = self.nodes[a.0].value.rows();
                    let mut da = Mat::zeros(ar, g.cols());
                    let mut db = Mat::zeros(g.rows() - ar, g.cols());
                    for i in 0..ar {
                        da.row_mut(i).copy_from_slice(g.row(i));
                    }
                    for i in ar..g.rows() {
                        db.row_mut(i - ar).copy_from_slice(g.row(i));
                    }
                    grads[a.0].add_assign(&da);
                    grads[b.0].add_assign(&db);
                }
                Op::ScatterSquare { scores, coords, .. } => {
                    let mut ds = Mat::zeros(coords.len(), 1);
                    for (p, &(i, j)) in coords.iter().enumerate() {
                        ds.set(p, 0, g.get(i, j));
                    }
                    grads[scores.0].add_assign(&ds);
                }
                Op::SoftmaxCe {
                    logits,
                    labels,
                    class_weights,
                } => {
                    let (_, dlogits) = nn::softmax_cross_entropy(
                        &self.nodes[logits.0].value,
                        labels,
                        class_weights.as_deref(),
                    )
                    .expect("validated at forward time");
                    grads[logits.0].add_assign(&dlogits.scale(g.get(0, 0)));
                }
                Op::MseRows(pred, target) => {
                    let pv = &self.nodes[pred.0].value;
                    let n = pv.rows().max(1) as f64;
                    let dp = pv.sub(target).scale(2.0 / n * g.get(0, 0));
                    grads[pred.0].add_assign(&dp);
                }
                Op::Cosine(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let na = av.frob_norm_sq().sqrt().max(NORM_FLOOR);
                    let nb = bv.frob_norm_sq().sqrt().max(NORM_FLOOR);
                    let dot: f64 = av.data().iter().zip(bv.data()).map(|(x, y)| x * y).sum();
                    let gs = g.get(0, 0);
                    // d cos/d a = b/(na·nb) − cos·a/na²
                    let cosv = dot / (na * nb);
                    let da = bv.scale(1.0 / (na * nb)).sub(&av.scale(cosv / (na * na)));
                    let db = av.scale(1.0 / (na * nb)).sub(&bv.scale(cosv / (nb * nb)));
                    grads[a.0].add_assign(&da.scale(gs));
                    grads[b.0].add_assign(&db.scale(gs));
                }
            }
        }
        Grads { grads }
    }
}

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
pub struct Grads {
    grads: Vec<Mat>,
}

impl Grads {
    pub fn get(&self, v: Var) -> &Mat {
        &self.grads[v.0]
    }

    pub fn take(&mut self, v: Var) -> Mat {
        std::mem::replace(&mut self.grads[v.0], Mat::zeros(0, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, seeded_rng};
    use crate::mat::Mat;

    /// FD-checks a tape-built loss over a set of leaf parameters.
    fn check<F>(build: F, params: Vec<Mat>) -> f64
    where
        F: Fn(&mut Tape, &[Var]) -> Var,
    {
        let mut params = params;
        let mut f = |p: &[Mat]| {
            let mut tape = Tape::new();
            let vars: Vec<Var> = p.iter().map(|m| tape.leaf(m.clone())).collect();
            let loss = build(&mut tape, &vars);
            let val = tape.scalar(loss);
            let grads = tape.backward(loss);
            (val, vars.iter().map(|&v| grads.get(v).clone()).collect())
        };
        grad_check(&mut f, &mut params, 1e-5)
    }

    #[test]
    fn matmul_chain_gradients() {
        let mut rng = seeded_rng(1);
        let a = Mat::uniform_init(3, 4, 4, &mut rng);
        let b = Mat::uniform_init(4, 2, 4, &mut rng);
        let err = check(
            |t, v| {
                let y = t.matmul(v[0], v[1]);
                let y = t.tanh(y);
                t.sum(y)
            },
            vec![a, b],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn matmul_nt_shared_operand_gradients() {
        // Z·Zᵀ with the same node on both sides
        let mut rng = seeded_rng(2);
        let z = Mat::uniform_init(4, 3, 3, &mut rng);
        let err = check(
            |t, v| {
                let s = t.matmul_nt(v[0], v[0]);
                let s = t.sigmoid(s);
                t.sum(s)
            },
            vec![z],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn gather_scatter_concat_gradients() {
        let mut rng = seeded_rng(3);
        let h = Mat::uniform_init(5, 3, 3, &mut rng);
        let w = Mat::uniform_init(1, 6, 6, &mut rng);
        let coords = vec![(0, 1), (1, 0), (2, 2), (4, 3)];
        let err = check(
            |t, v| {
                let src = t.gather_rows(v[0], &[0, 1, 2, 4]);
                let dst = t.gather_rows(v[0], &[1, 0, 2, 3]);
                let cat = t.concat_cols(src, dst);
                let score = t.matmul_nt(cat, v[1]);
                let score = t.tanh(score);
                let m = t.scatter_square(score, &coords, 5);
                let prod = t.matmul(m, v[0]);
                t.sum(prod)
            },
            vec![h, w],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn mixup_style_row_ops_gradients() {
        let mut rng = seeded_rng(4);
        let h = Mat::uniform_init(6, 4, 4, &mut rng);
        let w = Mat::uniform_init(2, 4, 4, &mut rng);
        let deltas = [0.25, 0.8];
        let err = check(
            |t, v| {
                let src = t.gather_rows(v[0], &[0, 2]);
                let nn_rows = t.gather_rows(v[0], &[1, 3]);
                let keep: Vec<f64> = deltas.iter().map(|d| 1.0 - d).collect();
                let a = t.row_scale(src, &keep);
                let b = t.row_scale(nn_rows, &deltas);
                let synth = t.add(a, b);
                let all = t.vstack(v[0], synth);
                let logits = t.matmul_nt(all, v[1]);
                t.softmax_ce(logits, &[0, 1, 0, 1, 0, 1, 1, 0], None)
            },
            vec![h, w],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn abs_bias_mse_gradients() {
        let mut rng = seeded_rng(5);
        let z = Mat::uniform_init(5, 3, 3, &mut rng);
        let w = Mat::uniform_init(2, 3, 3, &mut rng);
        let b = Mat::uniform_init(1, 2, 2, &mut rng);
        let target = Mat::uniform_init(5, 2, 2, &mut rng);
        let err = check(
            |t, v| {
                let a = t.abs(v[0]);
                let pred = t.matmul_nt(a, v[1]);
                let pred = t.add_bias(pred, v[2]);
                t.mse_rows(pred, &target)
            },
            vec![z, w, b],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn cosine_and_mean_rows_gradients() {
        let mut rng = seeded_rng(6);
        let a = Mat::uniform_init(4, 3, 3, &mut rng);
        let b = Mat::uniform_init(4, 3, 3, &mut rng);
        let err = check(
            |t, v| {
                let ma = t.mean_rows(v[0]);
                let mb = t.mean_rows(v[1]);
                t.cosine(ma, mb)
            },
            vec![a, b],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn sub_scale_sum_gradients() {
        let mut rng = seeded_rng(7);
        let a = Mat::uniform_init(3, 3, 3, &mut rng);
        let b = Mat::uniform_init(3, 3, 3, &mut rng);
        let err = check(
            |t, v| {
                let d = t.sub(v[0], v[1]);
                let sq = t.hadamard(d, d);
                let s = t.sum(sq);
                t.scale(s, 0.5)
            },
            vec![a, b],
        );
        assert!(err < 1e-6, "err {err}");
    }

    #[test]
    fn cosine_known_values() {
        let mut tape = Tape::new();
        let a = tape.leaf(Mat::from_rows(&[vec![1.0, 0.0]]).unwrap());
        let b = tape.leaf(Mat::from_rows(&[vec![0.0, 1.0]]).unwrap());
        let c = tape.leaf(Mat::from_rows(&[vec![2.0, 0.0]]).unwrap());
        let orth = tape.cosine(a, b);
        let par = tape.cosine(a, c);
        assert!((tape.scalar(orth)).abs() < 1e-15);
        assert!((tape.scalar(par) - 1.0).abs() < 1e-15);
    }
}
