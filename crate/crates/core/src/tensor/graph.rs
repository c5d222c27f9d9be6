//! Recorded forward computation with reverse-mode gradients.
//!
//! Nodes are appended in evaluation order, so the node list is already a
//! topological order and `backward` simply walks it in reverse.

use std::borrow::Cow;
use std::collections::BTreeMap;

use rand::{Rng, RngCore};

use super::mat::Mat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Scalar reductions used by the losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Σᵢ ‖rowᵢ‖₂ over 3-vector rows.
    L2Rows,
    /// Σ |xᵢⱼ|.
    L1Sum,
    /// √(Σ xᵢⱼ²).
    Frobenius,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf {
        param: Option<String>,
    },
    MatMul(NodeId, NodeId),
    Affine {
        alpha: f64,
        x: NodeId,
        beta: f64,
        y: NodeId,
    },
    Scale(NodeId, f64),
    Tanh(NodeId),
    Dropout {
        x: NodeId,
        mask: Vec<f64>,
    },
    Hadamard(NodeId, NodeId),
    Transpose(NodeId),
    Reshape(NodeId),
    ColSlice {
        x: NodeId,
        start: usize,
    },
    Sum(NodeId),
    Reduce(Reduction, NodeId),
}

struct Node<'p> {
    op: Op,
    value: Cow<'p, Mat>,
}

/// A forward computation recorded for reverse-mode differentiation.
///
/// Parameter leaves borrow their values for the lifetime `'p`, so building a
/// graph over a model does not copy the weights.
#[derive(Default)]
pub struct Graph<'p> {
    nodes: Vec<Node<'p>>,
}

/// Result of a backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    nodes: Vec<Option<Mat>>,
    params: BTreeMap<String, Mat>,
}

impl Gradients {
    /// Gradient w.r.t. an arbitrary node, `None` when the loss does not depend on it.
    pub fn node(&self, id: NodeId) -> Option<&Mat> {
        self.nodes.get(id.0).and_then(Option::as_ref)
    }

    pub fn param(&self, name: &str) -> Option<&Mat> {
        self.params.get(name)
    }

    pub fn params(&self) -> &BTreeMap<String, Mat> {
        &self.params
    }

    pub fn into_params(self) -> BTreeMap<String, Mat> {
        self.params
    }
}

impl<'p> Graph<'p> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Cow<'p, Mat>) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Non-parameter leaf (data, fixed targets, DCT bases).
    pub fn constant(&mut self, value: Mat) -> NodeId {
        self.push(Op::Leaf { param: None }, Cow::Owned(value))
    }

    pub fn constant_ref(&mut self, value: &'p Mat) -> NodeId {
        self.push(Op::Leaf { param: None }, Cow::Borrowed(value))
    }

    /// Named learnable leaf. Registering the same name twice accumulates both uses.
    pub fn param(&mut self, name: impl Into<String>, value: &'p Mat) -> NodeId {
        self.push(
            Op::Leaf {
                param: Some(name.into()),
            },
            Cow::Borrowed(value),
        )
    }

    pub fn param_owned(&mut self, name: impl Into<String>, value: Mat) -> NodeId {
        self.push(
            Op::Leaf {
                param: Some(name.into()),
            },
            Cow::Owned(value),
        )
    }

    pub fn value(&self, id: NodeId) -> &Mat {
        &self.nodes[id.0].value
    }

    /// Value of a 1×1 node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        debug_assert_eq!(v.shape(), (1, 1));
        v.data()[0]
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::MatMul(a, b), Cow::Owned(value)))
    }

    /// `alpha·x + beta·y`.
    pub fn affine_combine(
        &mut self,
        alpha: f64,
        x: NodeId,
        beta: f64,
        y: NodeId,
    ) -> Result<NodeId> {
        let value = self.value(x).affine(alpha, beta, self.value(y))?;
        Ok(self.push(Op::Affine { alpha, x, beta, y }, Cow::Owned(value)))
    }

    pub fn add(&mut self, x: NodeId, y: NodeId) -> Result<NodeId> {
        self.affine_combine(1.0, x, 1.0, y)
    }

    pub fn sub(&mut self, x: NodeId, y: NodeId) -> Result<NodeId> {
        self.affine_combine(1.0, x, -1.0, y)
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        let value = self.value(x).scale(s);
        self.push(Op::Scale(x, s), Cow::Owned(value))
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).map(f64::tanh);
        self.push(Op::Tanh(x), Cow::Owned(value))
    }

    /// Inverted dropout. `rng = None` is evaluation mode (identity).
    pub fn dropout(
        &mut self,
        x: NodeId,
        rate: f64,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<NodeId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        let rng = match rng {
            Some(rng) if rate > 0.0 => rng,
            _ => return Ok(x),
        };
        let keep = 1.0 / (1.0 - rate);
        let src = self.value(x);
        let mask: Vec<f64> = (0..src.len())
            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let data = src.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let value = Mat::from_vec(src.rows(), src.cols(), data)?;
        Ok(self.push(Op::Dropout { x, mask }, Cow::Owned(value)))
    }

    pub fn hadamard(&mut self, x: NodeId, y: NodeId) -> Result<NodeId> {
        let (a, b) = (self.value(x), self.value(y));
        if a.shape() != b.shape() {
            return Err(Error::dim("hadamard", a.shape(), b.shape()));
        }
        let data = a.data().iter().zip(b.data()).map(|(p, q)| p * q).collect();
        let value = Mat::from_vec(a.rows(), a.cols(), data)?;
        Ok(self.push(Op::Hadamard(x, y), Cow::Owned(value)))
    }

    pub fn transpose(&mut self, x: NodeId) -> NodeId {
        let value = self.value(x).transpose();
        self.push(Op::Transpose(x), Cow::Owned(value))
    }

    pub fn reshape(&mut self, x: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let value = self.value(x).reshape(rows, cols)?;
        Ok(self.push(Op::Reshape(x), Cow::Owned(value)))
    }

    /// Columns `start..end` of `x`.
    pub fn col_slice(&mut self, x: NodeId, start: usize, end: usize) -> Result<NodeId> {
        let value = self.value(x).col_slice(start, end)?;
        Ok(self.push(Op::ColSlice { x, start }, Cow::Owned(value)))
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let value = Mat::scalar(self.value(x).sum());
        self.push(Op::Sum(x), Cow::Owned(value))
    }

    pub fn reduce(&mut self, kind: Reduction, x: NodeId) -> Result<NodeId> {
        let src = self.value(x);
        let v = match kind {
            Reduction::L2Rows => {
                if src.cols() != 3 {
                    return Err(Error::dim("l2_rows", src.shape(), (src.rows(), 3)));
                }
                (0..src.rows()).map(|i| norm(src.row(i))).sum::<f64>()
            }
            Reduction::L1Sum => src.data().iter().map(|v| v.abs()).sum(),
            Reduction::Frobenius => src.frobenius(),
        };
        Ok(self.push(Op::Reduce(kind, x), Cow::Owned(Mat::scalar(v))))
    }

    /// Reverse-mode pass from a scalar node.
    ///
    /// Every registered parameter gets an entry; parameters the loss does not
    /// reach receive zeros of their own shape.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss node, got {}x{}",
                shape.0, shape.1
            )));
        }
        let mut grads: Vec<Option<Mat>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Mat::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf { .. } => {}
                Op::MatMul(a, b) => {
                    let da = g.matmul_nt(self.value(*b))?;
                    let db = self.value(*a).matmul_tn(&g)?;
                    accumulate(&mut grads, *a, da);
                    accumulate(&mut grads, *b, db);
                }
                Op::Affine { alpha, x, beta, y } => {
                    accumulate(&mut grads, *x, g.scale(*alpha));
                    accumulate(&mut grads, *y, g.scale(*beta));
                }
                Op::Scale(x, s) => accumulate(&mut grads, *x, g.scale(*s)),
                Op::Tanh(x) => {
                    let y = &node.value;
                    let data = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(g, t)| g * (1.0 - t * t))
                        .collect();
                    accumulate(&mut grads, *x, Mat::from_vec(g.rows(), g.cols(), data)?);
                }
                Op::Dropout { x, mask } => {
                    let data = g.data().iter().zip(mask).map(|(g, m)| g * m).collect();
                    accumulate(&mut grads, *x, Mat::from_vec(g.rows(), g.cols(), data)?);
                }
                Op::Hadamard(x, y) => {
                    let (xv, yv) = (self.value(*x), self.value(*y));
                    let dx = g.data().iter().zip(yv.data()).map(|(g, b)| g * b).collect();
                    let dy = g.data().iter().zip(xv.data()).map(|(g, a)| g * a).collect();
                    accumulate(&mut grads, *x, Mat::from_vec(g.rows(), g.cols(), dx)?);
                    accumulate(&mut grads, *y, Mat::from_vec(g.rows(), g.cols(), dy)?);
                }
                Op::Transpose(x) => accumulate(&mut grads, *x, g.transpose()),
                Op::Reshape(x) => {
                    let (r, c) = self.value(*x).shape();
                    accumulate(&mut grads, *x, g.reshape(r, c)?);
                }
                Op::ColSlice { x, start } => {
                    let (r, c) = self.value(*x).shape();
                    let mut dx = Mat::zeros(r, c);
                    for i in 0..g.rows() {
                        for j in 0..g.cols() {
                            dx[(i, start + j)] = g[(i, j)];
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::Sum(x) => {
                    let (r, c) = self.value(*x).shape();
                    accumulate(&mut grads, *x, Mat::filled(r, c, g.data()[0]));
                }
                Op::Reduce(kind, x) => {
                    let gs = g.data()[0];
                    let src = self.value(*x);
                    let dx = match kind {
                        Reduction::L2Rows => {
                            let mut dx = Mat::zeros(src.rows(), src.cols());
                            for i in 0..src.rows() {
                                let row = src.row(i);
                                let n = norm(row);
                                if n > 0.0 {
                                    for (j, v) in row.iter().enumerate() {
                                        dx[(i, j)] = gs * v / n;
                                    }
                                }
                            }
                            dx
                        }
                        Reduction::L1Sum => src.map(|v| gs * sign(v)),
                        Reduction::Frobenius => {
                            let n = src.frobenius();
                            if n > 0.0 {
                                src.scale(gs / n)
                            } else {
                                Mat::zeros(src.rows(), src.cols())
                            }
                        }
                    };
                    accumulate(&mut grads, *x, dx);
                }
            }
            grads[idx] = Some(g);
        }

        let mut params: BTreeMap<String, Mat> = BTreeMap::new();
        for (idx, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf { param: Some(name) } = &node.op {
                let g = grads
                    .get(idx)
                    .and_then(Option::as_ref)
                    .cloned()
                    .unwrap_or_else(|| Mat::zeros(node.value.rows(), node.value.cols()));
                match params.get_mut(name) {
                    Some(acc) => acc.add_assign(&g)?,
                    None => {
                        params.insert(name.clone(), g);
                    }
                }
            }
        }
        grads.resize(self.nodes.len(), None);
        Ok(Gradients {
            nodes: grads,
            params,
        })
    }
}

fn accumulate(grads: &mut [Option<Mat>], id: NodeId, g: Mat) {
    match &mut grads[id.0] {
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Central differences of `f` w.r.t. every entry of `x`.
    fn numeric_grad(x: &Mat, f: impl Fn(&Mat) -> f64) -> Mat {
        let h = 1e-5;
        let mut out = Mat::zeros(x.rows(), x.cols());
        for k in 0..x.len() {
            let mut p = x.clone();
            p.data_mut()[k] += h;
            let mut m = x.clone();
            m.data_mut()[k] -= h;
            out.data_mut()[k] = (f(&p) - f(&m)) / (2.0 * h);
        }
        out
    }

    fn rel_err(a: &Mat, b: &Mat) -> f64 {
        let diff = a.sub(b).unwrap().frobenius();
        diff / a.frobenius().max(b.frobenius()).max(1e-12)
    }

    #[test]
    fn sum_gradient_is_ones() {
        let x = Mat::uniform(3, 4, 1.0, &mut rng(0));
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        let s = g.sum(xn);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.param("x").unwrap(), &Mat::filled(3, 4, 1.0));
    }

    #[test]
    fn squared_frobenius_gradient_is_twice_x() {
        let x = Mat::uniform(4, 2, 1.0, &mut rng(1));
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        let f = g.reduce(Reduction::Frobenius, xn).unwrap();
        let sq = g.hadamard(f, f).unwrap();
        let grads = g.backward(sq).unwrap();
        assert!(grads.param("x").unwrap().max_abs_diff(&x.scale(2.0)) < 1e-12);
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let x = Mat::zeros(2, 2);
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        assert!(matches!(g.backward(xn), Err(Error::Contract(_))));
    }

    #[test]
    fn repeated_backward_is_identical() {
        let a = Mat::uniform(3, 3, 1.0, &mut rng(2));
        let b = Mat::uniform(3, 2, 1.0, &mut rng(3));
        let mut g = Graph::new();
        let an = g.param("a", &a);
        let bn = g.param("b", &b);
        let p = g.matmul(an, bn).unwrap();
        let t = g.tanh(p);
        let l = g.reduce(Reduction::Frobenius, t).unwrap();
        let g1 = g.backward(l).unwrap();
        let g2 = g.backward(l).unwrap();
        assert_eq!(g1.params(), g2.params());
    }

    #[test]
    fn affine_combine_cases() {
        let mut r = rng(4);
        let x = Mat::uniform(4, 4, 1.0, &mut r);
        let y = Mat::uniform(4, 4, 1.0, &mut r);
        let mut g = Graph::new();
        let xn = g.constant_ref(&x);
        let yn = g.constant_ref(&y);
        let zero = g.constant(Mat::zeros(4, 4));
        let id = g.affine_combine(1.0, xn, 1.0, zero).unwrap();
        assert_eq!(g.value(id), &x);
        let same = g.affine_combine(0.7, xn, 0.3, xn).unwrap();
        assert!(g.value(same).max_abs_diff(&x) < 1e-15);
        let mix = g.affine_combine(0.7, xn, 0.3, yn).unwrap();
        let oracle = Mat::from_fn(4, 4, |i, j| 0.7 * x[(i, j)] + 0.3 * y[(i, j)]);
        assert!(g.value(mix).max_abs_diff(&oracle) < 1e-15);
        let bad = g.constant(Mat::zeros(3, 4));
        assert!(matches!(
            g.affine_combine(1.0, xn, 1.0, bad),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn tanh_cases() {
        let mut g = Graph::new();
        let z = g.constant(Mat::zeros(2, 2));
        let tz = g.tanh(z);
        assert_eq!(g.value(tz), &Mat::zeros(2, 2));

        let big = Mat::from_rows(&[vec![50.0, -50.0]]);
        let bn = g.param("big", &big);
        let tb = g.tanh(bn);
        assert!((g.value(tb)[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((g.value(tb)[(0, 1)] + 1.0).abs() < 1e-15);
        let s = g.sum(tb);
        let grads = g.backward(s).unwrap();
        assert!(grads
            .param("big")
            .unwrap()
            .data()
            .iter()
            .all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn tanh_gradient_matches_finite_differences() {
        let x = Mat::uniform(3, 3, 2.0, &mut rng(5));
        let w = Mat::uniform(3, 3, 1.0, &mut rng(6));
        let f = |x: &Mat| {
            x.map(f64::tanh)
                .data()
                .iter()
                .zip(w.data())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        let wn = g.constant_ref(&w);
        let t = g.tanh(xn);
        let h = g.hadamard(t, wn).unwrap();
        let l = g.sum(h);
        let grads = g.backward(l).unwrap();
        assert!(rel_err(grads.param("x").unwrap(), &numeric_grad(&x, f)) < 1e-6);
    }

    #[test]
    fn dropout_identity_paths() {
        let x = Mat::uniform(5, 5, 1.0, &mut rng(7));
        let mut g = Graph::new();
        let xn = g.constant_ref(&x);
        let mut r = rng(8);
        let d0 = g.dropout(xn, 0.0, Some(&mut r)).unwrap();
        assert_eq!(g.value(d0), &x);
        let de = g.dropout(xn, 0.5, None).unwrap();
        assert_eq!(g.value(de), &x);
        assert!(matches!(
            g.dropout(xn, 1.0, Some(&mut r)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn dropout_statistics_and_routing() {
        let x = Mat::filled(100, 100, 1.0);
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        let mut r = rng(9);
        let d = g.dropout(xn, 0.5, Some(&mut r)).unwrap();
        let out = g.value(d).clone();
        let survivors = out.data().iter().filter(|v| **v != 0.0).count() as f64 / 1e4;
        assert!((survivors - 0.5).abs() < 0.02, "{survivors}");
        let mean = out.sum() / 1e4;
        assert!((mean - 1.0).abs() < 0.04, "{mean}");
        let s = g.sum(d);
        let grads = g.backward(s).unwrap();
        // gradient equals the mask: zero where dropped, 2 where kept
        assert_eq!(grads.param("x").unwrap(), &out);
    }

    #[test]
    fn reductions() {
        let mut g = Graph::new();
        let z = g.constant(Mat::zeros(2, 3));
        for kind in [Reduction::L2Rows, Reduction::L1Sum, Reduction::Frobenius] {
            let r = g.reduce(kind, z).unwrap();
            assert_eq!(g.scalar(r), 0.0);
        }
        let t = g.constant(Mat::from_rows(&[vec![3.0, 4.0, 0.0]]));
        let r = g.reduce(Reduction::L2Rows, t).unwrap();
        assert_eq!(g.scalar(r), 5.0);

        let x = Mat::uniform(6, 6, 1.0, &mut rng(10));
        let xn = g.constant_ref(&x);
        let f = g.reduce(Reduction::Frobenius, xn).unwrap();
        let mut acc = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                acc += x[(i, j)] * x[(i, j)];
            }
        }
        assert!((g.scalar(f) - acc.sqrt()).abs() < 1e-12);

        let wide = g.constant(Mat::zeros(2, 4));
        assert!(matches!(
            g.reduce(Reduction::L2Rows, wide),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn zero_points_have_zero_subgradient() {
        let x = Mat::zeros(2, 3);
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        let l1 = g.reduce(Reduction::L1Sum, xn).unwrap();
        let fr = g.reduce(Reduction::Frobenius, xn).unwrap();
        let l2 = g.reduce(Reduction::L2Rows, xn).unwrap();
        let a = g.add(l1, fr).unwrap();
        let b = g.add(a, l2).unwrap();
        let grads = g.backward(b).unwrap();
        assert_eq!(grads.param("x").unwrap(), &Mat::zeros(2, 3));
    }

    #[test]
    fn composite_gradients_match_finite_differences() {
        let mut r = rng(11);
        let a = Mat::uniform(4, 4, 0.5, &mut r);
        let h = Mat::uniform(4, 3, 1.0, &mut r);
        let w = Mat::uniform(3, 6, 0.5, &mut r);
        let target = Mat::uniform(6, 4, 1.0, &mut r);

        let build = |a: &Mat, h: &Mat, w: &Mat| -> (f64, Option<Gradients>) {
            let mut g = Graph::new();
            let an = g.param("a", a);
            let hn = g.param("h", h);
            let wn = g.param("w", w);
            let ah = g.matmul(an, hn).unwrap();
            let ahw = g.matmul(ah, wn).unwrap();
            let act = g.tanh(ahw);
            let tr = g.transpose(act);
            let tn = g.constant_ref(&target);
            let d = g.sub(tr, tn).unwrap();
            let sl = g.col_slice(d, 1, 4).unwrap();
            let flat = g.reshape(sl, 9, 2).unwrap();
            let rs = g.reshape(flat, 6, 3).unwrap();
            let l2 = g.reduce(Reduction::L2Rows, rs).unwrap();
            let l1 = g.reduce(Reduction::L1Sum, d).unwrap();
            let fr = g.reduce(Reduction::Frobenius, act).unwrap();
            let s = g.affine_combine(0.5, l2, 0.25, l1).unwrap();
            let s = g.affine_combine(1.0, s, 0.6, fr).unwrap();
            let loss = g.scale(s, 1.5);
            (g.scalar(loss), Some(g.backward(loss).unwrap()))
        };
        let (_, grads) = build(&a, &h, &w);
        let grads = grads.unwrap();
        let na = numeric_grad(&a, |p| build(p, &h, &w).0);
        let nh = numeric_grad(&h, |p| build(&a, p, &w).0);
        let nw = numeric_grad(&w, |p| build(&a, &h, p).0);
        assert!(rel_err(grads.param("a").unwrap(), &na) < 1e-6);
        assert!(rel_err(grads.param("h").unwrap(), &nh) < 1e-6);
        assert!(rel_err(grads.param("w").unwrap(), &nw) < 1e-6);
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        let mut r = rng(12);
        let x = Mat::uniform(3, 3, 1.0, &mut r);
        let w = Mat::uniform(3, 3, 1.0, &mut r);
        let run = |which: u8| {
            let mut g = Graph::new();
            let xn = g.param("x", &x);
            let wn = g.param("w", &w);
            let p = g.matmul(xn, wn).unwrap();
            let t = g.tanh(p);
            let l1 = g.reduce(Reduction::Frobenius, t).unwrap();
            let l2 = g.reduce(Reduction::L1Sum, p).unwrap();
            let loss = match which {
                0 => l1,
                1 => l2,
                _ => g.add(l1, l2).unwrap(),
            };
            g.backward(loss).unwrap().into_params()
        };
        let (a, b, both) = (run(0), run(1), run(2));
        for name in ["x", "w"] {
            let sum = a[name].affine(1.0, 1.0, &b[name]).unwrap();
            assert!(sum.max_abs_diff(&both[name]) < 1e-12);
        }
    }

    #[test]
    fn unreached_params_get_zero_gradients() {
        let x = Mat::filled(2, 2, 1.0);
        let y = Mat::filled(3, 1, 1.0);
        let mut g = Graph::new();
        let xn = g.param("x", &x);
        g.param("y", &y);
        let s = g.sum(xn);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.param("y").unwrap(), &Mat::zeros(3, 1));
    }
}
