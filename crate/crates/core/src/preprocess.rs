//! Sample windows and the replication padding fed to the networks.

use log::warn;

use crate::error::{Error, Result};
use crate::tensor::Mat;

/// One sample: `N` observed, `T` target and `P` privileged consecutive poses.
/// Each matrix is `K×frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionWindow {
    observed: Mat,
    target: Mat,
    privileged: Mat,
    frame_ms: f64,
}

impl MotionWindow {
    pub fn new(observed: Mat, target: Mat, privileged: Mat, frame_ms: f64) -> Result<Self> {
        let k = observed.rows();
        if observed.cols() == 0 || target.cols() == 0 {
            return Err(Error::Contract(format!(
                "window needs N >= 1 and T >= 1, got N={} T={}",
                observed.cols(),
                target.cols()
            )));
        }
        if target.rows() != k || (privileged.cols() > 0 && privileged.rows() != k) {
            return Err(Error::dim("MotionWindow", observed.shape(), target.shape()));
        }
        let privileged = if privileged.cols() == 0 {
            Mat::zeros(k, 0)
        } else {
            privileged
        };
        Ok(MotionWindow {
            observed,
            target,
            privileged,
            frame_ms,
        })
    }

    /// Splits `K×(N+T+P)` consecutive frames.
    pub fn from_frames(frames: &Mat, n: usize, t: usize, p: usize, frame_ms: f64) -> Result<Self> {
        if frames.cols() != n + t + p {
            return Err(Error::dim(
                "MotionWindow::from_frames",
                frames.shape(),
                (frames.rows(), n + t + p),
            ));
        }
        Self::new(
            frames.col_slice(0, n)?,
            frames.col_slice(n, n + t)?,
            frames.col_slice(n + t, n + t + p)?,
            frame_ms,
        )
    }

    pub fn observed(&self) -> &Mat {
        &self.observed
    }

    pub fn target(&self) -> &Mat {
        &self.target
    }

    pub fn privileged(&self) -> &Mat {
        &self.privileged
    }

    pub fn frame_ms(&self) -> f64 {
        self.frame_ms
    }

    pub fn params(&self) -> usize {
        self.observed.rows()
    }

    pub fn n(&self) -> usize {
        self.observed.cols()
    }

    pub fn t(&self) -> usize {
        self.target.cols()
    }

    pub fn p(&self) -> usize {
        self.privileged.cols()
    }

    pub fn total_len(&self) -> usize {
        self.n() + self.t() + self.p()
    }

    /// Keeps only the first `p` privileged poses.
    pub fn with_privileged_len(&self, p: usize) -> Result<Self> {
        if p > self.p() {
            return Err(Error::Contract(format!(
                "cannot extend privileged window from {} to {p}",
                self.p()
            )));
        }
        Self::new(
            self.observed.clone(),
            self.target.clone(),
            self.privileged.col_slice(0, p)?,
            self.frame_ms,
        )
    }

    /// Ground truth over observed + target frames, `K×(N+T)`.
    pub fn observed_and_target(&self) -> Mat {
        self.observed
            .hcat(&self.target)
            .expect("rows checked at construction")
    }

    /// Ground truth over all `N+T+P` frames.
    pub fn full_sequence(&self) -> Mat {
        self.observed_and_target()
            .hcat(&self.privileged)
            .expect("rows checked at construction")
    }
}

fn replicate(col: &[f64], times: usize) -> Mat {
    Mat::from_fn(col.len(), times, |i, _| col[i])
}

/// Observed poses followed by the last observed pose repeated `T+P` times.
pub fn pad_observed(w: &MotionWindow) -> Result<Mat> {
    if w.n() == 0 {
        return Err(Error::Contract(
            "pad_observed needs at least one observed pose".into(),
        ));
    }
    let last = w.observed.col(w.n() - 1);
    w.observed.hcat(&replicate(&last, w.t() + w.p()))
}

/// The first privileged pose repeated `N+T` times, followed by the privileged poses.
pub fn pad_privileged(w: &MotionWindow) -> Result<Mat> {
    if w.p() == 0 {
        return Err(Error::Contract(
            "pad_privileged needs at least one privileged pose (P >= 1)".into(),
        ));
    }
    let first = w.privileged.col(0);
    replicate(&first, w.n() + w.t()).hcat(&w.privileged)
}

/// Sliding windows over one `K×L` recording at offsets `0, stride, 2·stride, …`.
pub fn make_window_samples(
    recording: &Mat,
    n: usize,
    t: usize,
    p: usize,
    stride: usize,
    frame_ms: f64,
) -> Result<Vec<MotionWindow>> {
    if stride == 0 {
        return Err(Error::Config("window stride must be >= 1".into()));
    }
    let span = n + t + p;
    let len = recording.cols();
    if len < span {
        warn!("recording of {len} frames is shorter than one {n}-{t}-{p} window; skipped");
        return Ok(Vec::new());
    }
    (0..=(len - span) / stride)
        .map(|i| {
            let start = i * stride;
            MotionWindow::from_frames(
                &recording.col_slice(start, start + span)?,
                n,
                t,
                p,
                frame_ms,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::DctBasis;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seq(k: usize, l: usize, seed: u64) -> Mat {
        Mat::uniform(k, l, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn cols(m: &Mat) -> Vec<Vec<f64>> {
        (0..m.cols()).map(|j| m.col(j)).collect()
    }

    #[test]
    fn pad_observed_definition() {
        let frames = Mat::from_rows(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let w = MotionWindow::from_frames(&frames, 2, 1, 1, 40.0).unwrap();
        assert_eq!(
            pad_observed(&w).unwrap(),
            Mat::from_rows(&[vec![1.0, 2.0, 2.0, 2.0]])
        );
        let c = MotionWindow::from_frames(&Mat::filled(2, 5, 0.3), 2, 2, 1, 40.0).unwrap();
        assert_eq!(pad_observed(&c).unwrap(), Mat::filled(2, 5, 0.3));
    }

    #[test]
    fn pad_privileged_definition() {
        let frames = Mat::from_rows(&[vec![1.0, 2.0, 3.0, 9.0]]);
        let w = MotionWindow::from_frames(&frames, 2, 1, 1, 40.0).unwrap();
        assert_eq!(pad_privileged(&w).unwrap(), Mat::from_rows(&[vec![9.0; 4]]));
        let frames = Mat::from_rows(&[vec![1.0, 2.0, 7.0, 8.0]]);
        let w = MotionWindow::from_frames(&frames, 1, 1, 2, 40.0).unwrap();
        assert_eq!(
            pad_privileged(&w).unwrap(),
            Mat::from_rows(&[vec![7.0, 7.0, 7.0, 8.0]])
        );
    }

    #[test]
    fn privileged_padding_needs_p() {
        let w = MotionWindow::from_frames(&seq(3, 5, 0), 3, 2, 0, 40.0).unwrap();
        assert!(matches!(pad_privileged(&w), Err(Error::Contract(_))));
    }

    #[test]
    fn empty_observed_rejected() {
        assert!(
            MotionWindow::new(Mat::zeros(3, 0), Mat::zeros(3, 2), Mat::zeros(3, 1), 40.0).is_err()
        );
    }

    #[test]
    fn window_counts() {
        let r = seq(3, 45, 1);
        assert_eq!(
            make_window_samples(&r, 10, 25, 10, 5, 40.0).unwrap().len(),
            1
        );
        let r = seq(3, 50, 1);
        assert_eq!(
            make_window_samples(&r, 10, 25, 10, 5, 40.0).unwrap().len(),
            2
        );
        let r = seq(3, 7, 1);
        assert_eq!(make_window_samples(&r, 2, 3, 2, 1, 40.0).unwrap().len(), 1);
        assert!(make_window_samples(&r, 4, 3, 2, 1, 40.0)
            .unwrap()
            .is_empty());
        assert!(make_window_samples(&r, 2, 3, 2, 0, 40.0).is_err());
    }

    #[test]
    fn disjoint_windows_tile_the_recording() {
        let r = seq(4, 30, 2);
        let ws = make_window_samples(&r, 2, 3, 1, 6, 40.0).unwrap();
        assert_eq!(ws.len(), 5);
        let mut rebuilt = ws[0].full_sequence();
        for w in &ws[1..] {
            rebuilt = rebuilt.hcat(&w.full_sequence()).unwrap();
        }
        assert_eq!(rebuilt, r);
    }

    proptest! {
        #[test]
        fn padding_properties(
            k in 1usize..5, n in 1usize..6, t in 1usize..6, p in 1usize..6, seed in any::<u64>()
        ) {
            let w = MotionWindow::from_frames(&seq(k, n + t + p, seed), n, t, p, 40.0).unwrap();
            let obs = pad_observed(&w).unwrap();
            let priv_ = pad_privileged(&w).unwrap();
            prop_assert_eq!(obs.shape(), (k, n + t + p));
            prop_assert_eq!(priv_.shape(), obs.shape());
            let oc = cols(&obs);
            let last = w.observed().col(n - 1);
            for c in &oc[n..] {
                prop_assert_eq!(c, &last);
            }
            let pc = cols(&priv_);
            let first = w.privileged().col(0);
            for c in &pc[..n + t] {
                prop_assert_eq!(c, &first);
            }

            // lossless through a full-rank DCT
            let basis = DctBasis::full(n + t + p).unwrap();
            let back = basis.decode(&basis.encode(&obs).unwrap()).unwrap();
            prop_assert!(back.max_abs_diff(&obs) < 1e-10);
        }

        #[test]
        fn constant_tail_keeps_high_frequency_energy_low(
            n in 2usize..5, t in 15usize..30, seed in any::<u64>()
        ) {
            // replication padding carries less energy in the upper half of the
            // spectrum than padding the tail with fresh noise
            let k = 3;
            let frames = seq(k, n + t + 1, seed);
            let w = MotionWindow::from_frames(&frames, n, t, 1, 40.0).unwrap();
            let basis = DctBasis::full(n + t + 1).unwrap();
            let padded = basis.encode(&pad_observed(&w).unwrap()).unwrap();
            let noisy = basis.encode(&frames).unwrap();
            let hf = |m: &Mat| {
                let c = m.cols();
                (0..m.rows()).map(|i| m.row(i)[c / 2..].iter().map(|v| v * v).sum::<f64>()).sum::<f64>()
            };
            prop_assert!(hf(padded.as_mat()) < hf(noisy.as_mat()));
        }
    }
}
