//! Pose-space losses on recorded graphs.
//!
//! Position losses treat every consecutive triple of pose parameters as one
//! joint's 3-D coordinate and average the per-joint Euclidean error over
//! frames and joints. Angle losses average absolute differences over frames
//! and parameters.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{Graph, Mat, NodeId, Reduction};

pub const DEFAULT_LAMBDA: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Mean per-joint position error.
    #[default]
    Mpjpe,
    /// Mean absolute angle error.
    Mae,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Mpjpe => "mp",
            Metric::Mae => "ma",
        }
    }

    /// CSV column name for the error values.
    pub fn error_column(&self) -> &'static str {
        match self {
            Metric::Mpjpe => "error_mm",
            Metric::Mae => "error_rad",
        }
    }

    pub(crate) fn check_params(&self, k: usize) -> Result<()> {
        if *self == Metric::Mpjpe && !k.is_multiple_of(3) {
            return Err(Error::Contract(format!(
                "position metric needs K divisible by 3, got K={k}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mp" | "mpjpe" => Ok(Metric::Mpjpe),
            "ma" | "mae" => Ok(Metric::Mae),
            other => Err(Error::Config(format!(
                "unknown metric `{other}` (expected mp or ma)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub itp: f64,
    pub fp: f64,
    pub simu: f64,
    pub total: f64,
    pub metric: Metric,
    pub lambda: f64,
}

/// Mean pose error between two equally shaped `K×F` nodes.
pub fn pose_error(g: &mut Graph<'_>, pred: NodeId, gt: NodeId, metric: Metric) -> Result<NodeId> {
    let (k, f) = g.value(pred).shape();
    if g.value(gt).shape() != (k, f) {
        return Err(Error::dim("pose_error", (k, f), g.value(gt).shape()));
    }
    metric.check_params(k)?;
    let diff = g.sub(pred, gt)?;
    match metric {
        Metric::Mpjpe => {
            let joints = k / 3;
            // frames × K, row-major, regroups into (frame, joint) rows of xyz
            let t = g.transpose(diff);
            let rows = g.reshape(t, f * joints, 3)?;
            let s = g.reduce(Reduction::L2Rows, rows)?;
            Ok(g.scale(s, 1.0 / (f * joints) as f64))
        }
        Metric::Mae => {
            let s = g.reduce(Reduction::L1Sum, diff)?;
            Ok(g.scale(s, 1.0 / (f * k) as f64))
        }
    }
}

/// Interpolation loss over all `N+T+P` frames.
pub fn loss_itp(
    g: &mut Graph<'_>,
    pred_seq: NodeId,
    gt_seq: NodeId,
    metric: Metric,
) -> Result<NodeId> {
    pose_error(g, pred_seq, gt_seq, metric)
}

/// Prediction loss: `pred_seq` is truncated to the `N+T` frames covered by `gt_seq`.
pub fn loss_fp(
    g: &mut Graph<'_>,
    pred_seq: NodeId,
    gt_seq: NodeId,
    metric: Metric,
) -> Result<NodeId> {
    let scored = g.value(gt_seq).cols();
    if scored > g.value(pred_seq).cols() {
        return Err(Error::dim(
            "loss_fp",
            g.value(pred_seq).shape(),
            g.value(gt_seq).shape(),
        ));
    }
    let head = g.col_slice(pred_seq, 0, scored)?;
    pose_error(g, head, gt_seq, metric)
}

/// `‖S − E‖_F`. `e` must be a constant node so nothing flows back into the teacher.
pub fn loss_simu(g: &mut Graph<'_>, s: NodeId, e: NodeId) -> Result<NodeId> {
    let d = g.sub(s, e)?;
    g.reduce(Reduction::Frobenius, d)
}

pub fn loss_total(g: &mut Graph<'_>, fp: NodeId, simu: NodeId, lambda: f64) -> Result<NodeId> {
    if lambda < 0.0 {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    g.affine_combine(1.0, fp, lambda, simu)
}

fn eval_scalar(
    build: impl for<'a> FnOnce(&mut Graph<'a>, NodeId, NodeId) -> Result<NodeId>,
    a: &Mat,
    b: &Mat,
) -> Result<f64> {
    let mut g = Graph::new();
    let an = g.constant_ref(a);
    let bn = g.constant_ref(b);
    let out = build(&mut g, an, bn)?;
    Ok(g.scalar(out))
}

pub fn itp_loss_value(pred: &Mat, gt: &Mat, metric: Metric) -> Result<f64> {
    eval_scalar(|g, p, t| loss_itp(g, p, t, metric), pred, gt)
}

pub fn fp_loss_value(pred: &Mat, gt: &Mat, metric: Metric) -> Result<f64> {
    eval_scalar(|g, p, t| loss_fp(g, p, t, metric), pred, gt)
}

pub fn simu_loss_value(s: &Mat, e: &Mat) -> Result<f64> {
    eval_scalar(loss_simu, s, e)
}
