//! Per-frame metrics, the zero-velocity baseline and the ablation harnesses.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::Recording;
use crate::dct::DctBasis;
use crate::error::{Error, Result};
use crate::losses::Metric;
use crate::networks::{DirectParams, FpParams, ItpParams};
use crate::preprocess::{make_window_samples, pad_observed, MotionWindow};
use crate::tensor::Mat;
use crate::trainer::{self, prepare, PreparedSample, Stage, TrainConfig};

/// Reported horizons in milliseconds.
pub const TESTPOINTS_MS: [u32; 6] = [80, 160, 320, 400, 560, 1000];

/// Error of every frame, averaged over joints (positions) or parameters (angles).
pub fn error_at_frames(pred: &Mat, gt: &Mat, metric: Metric) -> Result<Vec<f64>> {
    if pred.shape() != gt.shape() {
        return Err(Error::dim("error_at_frames", pred.shape(), gt.shape()));
    }
    let k = pred.rows();
    metric.check_params(k)?;
    Ok((0..pred.cols())
        .map(|n| match metric {
            Metric::Mpjpe => {
                let joints = k / 3;
                (0..joints)
                    .map(|j| {
                        (0..3)
                            .map(|d| (pred[(3 * j + d, n)] - gt[(3 * j + d, n)]).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .sum::<f64>()
                    / joints as f64
            }
            Metric::Mae => {
                (0..k)
                    .map(|i| (pred[(i, n)] - gt[(i, n)]).abs())
                    .sum::<f64>()
                    / k as f64
            }
        })
        .collect())
}

/// 1-based prediction frame for a horizon in milliseconds.
pub fn testpoint_frame(ms: u32, frame_ms: f64) -> Result<usize> {
    let exact = ms as f64 / frame_ms;
    let idx = exact.round();
    if (exact - idx).abs() > 1e-9 || idx < 1.0 {
        return Err(Error::Config(format!(
            "{ms} ms is not a whole number of {frame_ms} ms frames"
        )));
    }
    Ok(idx as usize)
}

/// Picks the errors at the given horizons out of the prediction-frame errors.
pub fn testpoints(
    pred_frames: &[f64],
    frame_ms: f64,
    ms_list: &[u32],
) -> Result<BTreeMap<u32, f64>> {
    ms_list
        .iter()
        .map(|&ms| {
            let idx = testpoint_frame(ms, frame_ms)?;
            if idx > pred_frames.len() {
                return Err(Error::Config(format!(
                    "{ms} ms is frame {idx}, beyond the {} predicted frames",
                    pred_frames.len()
                )));
            }
            Ok((ms, pred_frames[idx - 1]))
        })
        .collect()
}

/// Repeats the last observed pose over the `T` target frames.
pub fn zero_velocity(w: &MotionWindow) -> Mat {
    let last = w.observed().col(w.n() - 1);
    Mat::from_fn(w.params(), w.t(), |i, _| last[i])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub seed: u64,
    pub stage: String,
    pub checkpoint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub t: usize,
    pub p: usize,
    pub metric: Metric,
    pub frame_ms: f64,
    /// Mean error of each of the first `N+T` frames (all `N+T+P` for interpolation).
    pub per_frame_error: Vec<f64>,
    pub testpoint_errors: BTreeMap<u32, f64>,
    /// Zero-velocity errors at the same horizons.
    pub baseline: BTreeMap<u32, f64>,
    pub meta: ReportMeta,
}

impl EvalReport {
    pub fn setting(&self) -> String {
        format!("{}-{}-{}", self.n, self.t, self.p)
    }
}

fn mean_vectors(vs: &[Vec<f64>]) -> Vec<f64> {
    let len = vs.first().map_or(0, Vec::len);
    let mut out = vec![0.0; len];
    for v in vs {
        for (o, x) in out.iter_mut().zip(v) {
            *o += x;
        }
    }
    out.iter().map(|x| x / vs.len() as f64).collect()
}

/// Horizons from `TESTPOINTS_MS` that fit inside `t` frames.
pub fn horizons(t: usize, frame_ms: f64) -> Vec<u32> {
    TESTPOINTS_MS
        .iter()
        .copied()
        .filter(|&ms| testpoint_frame(ms, frame_ms).is_ok_and(|f| f <= t))
        .collect()
}

/// Scores `predict` (decoded `K×(N+T+P)` sequences) on the first `N+T` frames.
pub fn evaluate_with(
    windows: &[MotionWindow],
    cfg: &TrainConfig,
    meta: ReportMeta,
    mut predict: impl FnMut(&PreparedSample, &DctBasis) -> Result<Mat>,
) -> Result<EvalReport> {
    let first = windows
        .first()
        .ok_or_else(|| Error::Config("evaluation set is empty".into()))?;
    let frame_ms = first.frame_ms();
    let basis = cfg.basis()?;
    let samples = prepare(windows, cfg, &basis)?;
    let nt = cfg.n + cfg.t;
    let mut model = Vec::with_capacity(samples.len());
    let mut base = Vec::with_capacity(samples.len());
    for (s, w) in samples.iter().zip(windows) {
        let seq = predict(s, &basis)?;
        model.push(error_at_frames(
            &seq.col_slice(0, nt)?,
            &s.gt_scored,
            cfg.metric,
        )?);
        let zv = pad_observed(w)?.col_slice(0, nt)?;
        base.push(error_at_frames(&zv, &s.gt_scored, cfg.metric)?);
    }
    let per_frame_error = mean_vectors(&model);
    let baseline_frames = mean_vectors(&base);
    let hs = horizons(cfg.t, frame_ms);
    Ok(EvalReport {
        n: cfg.n,
        t: cfg.t,
        p: cfg.p,
        metric: cfg.metric,
        frame_ms,
        testpoint_errors: testpoints(&per_frame_error[cfg.n..], frame_ms, &hs)?,
        baseline: testpoints(&baseline_frames[cfg.n..], frame_ms, &hs)?,
        per_frame_error,
        meta,
    })
}

pub fn evaluate_fp(
    fp: &FpParams,
    windows: &[MotionWindow],
    cfg: &TrainConfig,
    meta: ReportMeta,
) -> Result<EvalReport> {
    evaluate_with(windows, cfg, meta, |s, basis| {
        let (h, _) = fp.predict(&crate::dct::FreqMatrix(s.h_obs.clone()))?;
        basis.decode(&h)
    })
}

pub fn evaluate_direct(
    net: &DirectParams,
    windows: &[MotionWindow],
    cfg: &TrainConfig,
    meta: ReportMeta,
) -> Result<EvalReport> {
    evaluate_with(windows, cfg, meta, |s, basis| {
        basis.decode(&net.predict(&crate::dct::FreqMatrix(s.h_obs.clone()))?)
    })
}

/// Zero-velocity predictions scored like a model.
pub fn evaluate_baseline(
    windows: &[MotionWindow],
    cfg: &TrainConfig,
    meta: ReportMeta,
) -> Result<EvalReport> {
    let mut padded = windows.iter().map(pad_observed);
    evaluate_with(windows, cfg, meta, |_, _| {
        padded.next().expect("one per window")
    })
}

/// Interpolation error of every one of the `N+T+P` frames.
pub fn itp_frame_errors(
    itp: &ItpParams,
    windows: &[MotionWindow],
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let basis = cfg.basis()?;
    let samples = prepare(windows, cfg, &basis)?;
    let per: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let hp = s
                .h_priv
                .as_ref()
                .ok_or_else(|| Error::Config("interpolation needs p >= 1".into()))?;
            let (h, _) = itp.predict(
                &crate::dct::FreqMatrix(s.h_obs.clone()),
                &crate::dct::FreqMatrix(hp.clone()),
            )?;
            error_at_frames(&basis.decode(&h)?, &s.gt_full, cfg.metric)
        })
        .collect::<Result<_>>()?;
    Ok(mean_vectors(&per))
}

/// Interpolation scored over all `N+T+P` frames; horizons and baseline
/// come from the `T` target frames as for prediction.
pub fn evaluate_itp(
    itp: &ItpParams,
    windows: &[MotionWindow],
    cfg: &TrainConfig,
    meta: ReportMeta,
) -> Result<EvalReport> {
    let mut report = evaluate_baseline(windows, cfg, meta)?;
    report.per_frame_error = itp_frame_errors(itp, windows, cfg)?;
    let hs = horizons(cfg.t, report.frame_ms);
    report.testpoint_errors = testpoints(
        &report.per_frame_error[cfg.n..cfg.n + cfg.t],
        report.frame_ms,
        &hs,
    )?;
    Ok(report)
}

/// Training and evaluation recordings.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub train: Vec<Recording>,
    pub eval: Vec<Recording>,
    /// Offset step between training windows.
    pub train_stride: usize,
}

/// Windows of every recording, never crossing a recording boundary.
pub fn windows_of(
    recs: &[Recording],
    n: usize,
    t: usize,
    p: usize,
    stride: usize,
) -> Result<Vec<MotionWindow>> {
    let mut out = Vec::new();
    for r in recs {
        out.extend(make_window_samples(
            &r.frames,
            n,
            t,
            p,
            stride,
            r.frame_ms(),
        )?);
    }
    Ok(out)
}

impl Corpus {
    /// Training windows (stride `train_stride`) and disjoint evaluation
    /// windows, both cut with `p_span` privileged frames and then truncated
    /// to `cfg.p` so every `p <= p_span` sees the same samples.
    pub fn windows(
        &self,
        cfg: &TrainConfig,
        p_span: usize,
    ) -> Result<(Vec<MotionWindow>, Vec<MotionWindow>)> {
        let span = cfg.n + cfg.t + p_span;
        let cut = |ws: Vec<MotionWindow>| -> Result<Vec<MotionWindow>> {
            ws.iter().map(|w| w.with_privileged_len(cfg.p)).collect()
        };
        let train = cut(windows_of(
            &self.train,
            cfg.n,
            cfg.t,
            p_span,
            self.train_stride,
        )?)?;
        let eval = cut(windows_of(&self.eval, cfg.n, cfg.t, p_span, span)?)?;
        if train.is_empty() || eval.is_empty() {
            return Err(Error::Config(format!(
                "corpus too short for {}-{}-{} windows",
                cfg.n, cfg.t, p_span
            )));
        }
        Ok((train, eval))
    }
}

fn meta(cfg: &TrainConfig, stage: Stage) -> ReportMeta {
    ReportMeta {
        seed: cfg.seed,
        stage: stage.to_string(),
        checkpoint: String::new(),
    }
}

/// Everything the two-stage pipeline produces on one corpus, plus the
/// plain-prediction comparison.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub itp_loss_curve: Vec<f64>,
    pub fp_loss_curve: Vec<f64>,
    pub simu_curve: Vec<f64>,
    /// Interpolation error over all `N+T+P` evaluation frames.
    pub itp_frames: Vec<f64>,
    pub fp: EvalReport,
    pub tp: EvalReport,
    pub itp: ItpParams,
    pub fp_params: FpParams,
}

impl ExperimentReport {
    /// FP minus TP error at each horizon; negative means distillation helped.
    pub fn fp_vs_tp(&self) -> BTreeMap<u32, f64> {
        self.fp
            .testpoint_errors
            .iter()
            .map(|(ms, e)| (*ms, e - self.tp.testpoint_errors[ms]))
            .collect()
    }
}

/// Trains ITP → FP and a TP reference with the same seed, then evaluates.
pub fn distillation_experiment(corpus: &Corpus, cfg: &TrainConfig) -> Result<ExperimentReport> {
    let (train, eval) = corpus.windows(cfg, cfg.p)?;
    let itp = trainer::train_itp(&train, cfg)?;
    let fp = trainer::train_fp(&train, Some(&itp.params), cfg)?;
    let tp = trainer::train_tp(&train, cfg)?;
    Ok(ExperimentReport {
        itp_frames: itp_frame_errors(&itp.params, &eval, cfg)?,
        fp: evaluate_fp(&fp.params, &eval, cfg, meta(cfg, Stage::Fp))?,
        tp: evaluate_fp(&tp.params, &eval, cfg, meta(cfg, Stage::Tp))?,
        itp_loss_curve: itp.loss_curve,
        fp_loss_curve: fp.loss_curve,
        simu_curve: fp.simu_curve,
        itp: itp.params,
        fp_params: fp.params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// `(P, report)` in the order requested.
    pub rows: Vec<(usize, EvalReport)>,
    /// Error minus the `P = 0` error at each horizon.
    pub deltas: Vec<(usize, BTreeMap<u32, f64>)>,
}

/// One full run per privileged length; `P = 0` is plain prediction.
pub fn run_for_p(
    corpus: &Corpus,
    cfg: &TrainConfig,
    p: usize,
    p_span: usize,
) -> Result<EvalReport> {
    let cfg = TrainConfig { p, ..cfg.clone() };
    let (train, eval) = corpus.windows(&cfg, p_span)?;
    if p == 0 {
        let tp = trainer::train_tp(&train, &cfg)?;
        evaluate_fp(&tp.params, &eval, &cfg, meta(&cfg, Stage::Tp))
    } else {
        let itp = trainer::train_itp(&train, &cfg)?;
        let fp = trainer::train_fp(&train, Some(&itp.params), &cfg)?;
        evaluate_fp(&fp.params, &eval, &cfg, meta(&cfg, Stage::Fp))
    }
}

pub fn pk_length_sweep(
    corpus: &Corpus,
    cfg: &TrainConfig,
    p_list: &[usize],
) -> Result<SweepReport> {
    if !p_list.contains(&0) {
        return Err(Error::Config(
            "privileged-length sweep must include p=0".into(),
        ));
    }
    let p_span = p_list.iter().copied().max().unwrap_or(0);
    let rows: Vec<(usize, EvalReport)> = p_list
        .iter()
        .map(|&p| Ok((p, run_for_p(corpus, cfg, p, p_span)?)))
        .collect::<Result<_>>()?;
    let tp = &rows.iter().find(|(p, _)| *p == 0).expect("checked above").1;
    let deltas = rows
        .iter()
        .map(|(p, r)| {
            let d = r
                .testpoint_errors
                .iter()
                .map(|(ms, e)| (*ms, e - tp.testpoint_errors[ms]))
                .collect();
            (*p, d)
        })
        .collect();
    Ok(SweepReport { rows, deltas })
}

/// Single network trained with the privileged window scored directly.
pub fn psl_baseline(corpus: &Corpus, cfg: &TrainConfig, psl_weight: f64) -> Result<EvalReport> {
    let (train, eval) = corpus.windows(cfg, cfg.p)?;
    let art = trainer::train_psl(&train, cfg, psl_weight)?;
    let mut m = meta(cfg, Stage::Psl);
    m.stage = format!("psl:{psl_weight}");
    evaluate_direct(&art.params, &eval, cfg, m)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

/// Writes `path` (one row per frame; frame 0 is the last observed pose),
/// `<stem>_testpoints.csv` and `<stem>_baseline.csv`. Returns every path written.
pub fn emit_report(report: &EvalReport, path: &Path) -> Result<Vec<PathBuf>> {
    let col = report.metric.error_column();
    let header = format!("frame,ms,{col}\n");
    let mut frames = header.clone();
    for (i, e) in report.per_frame_error.iter().enumerate() {
        let f = i as i64 + 1 - report.n as i64;
        let _ = writeln!(
            frames,
            "{f},{},{}",
            num(f as f64 * report.frame_ms),
            num(*e)
        );
    }
    let points = |m: &BTreeMap<u32, f64>| {
        let mut s = header.clone();
        for (ms, e) in m {
            let f = testpoint_frame(*ms, report.frame_ms).unwrap_or(0);
            let _ = writeln!(s, "{f},{ms},{}", num(*e));
        }
        s
    };
    let tp_path = sibling(path, "testpoints");
    let base_path = sibling(path, "baseline");
    write_file(path, &frames)?;
    write_file(&tp_path, &points(&report.testpoint_errors))?;
    write_file(&base_path, &points(&report.baseline))?;
    Ok(vec![path.to_path_buf(), tp_path, base_path])
}

/// Interpolation / prediction / plain-prediction error per frame, for
/// plotting. Prediction columns are empty past `N+T`.
pub fn emit_curves(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut s = String::from("frame,ms,itp,fp,tp\n");
    let n = report.fp.n as i64;
    for (i, itp) in report.itp_frames.iter().enumerate() {
        let f = i as i64 + 1 - n;
        let fp = report
            .fp
            .per_frame_error
            .get(i)
            .map_or(String::new(), |v| num(*v));
        let tp = report
            .tp
            .per_frame_error
            .get(i)
            .map_or(String::new(), |v| num(*v));
        let _ = writeln!(
            s,
            "{f},{},{},{fp},{tp}",
            num(f as f64 * report.fp.frame_ms),
            num(*itp)
        );
    }
    write_file(path, &s)
}

/// `P,frame,ms,<error>` testpoint rows per privileged length, plus
/// `<stem>_deltas.csv` with differences against `P = 0`.
pub fn emit_sweep(report: &SweepReport, metric: Metric, path: &Path) -> Result<Vec<PathBuf>> {
    let col = metric.error_column();
    let delta_col = col.replacen("error", "delta", 1);
    let mut rows = format!("P,frame,ms,{col}\n");
    let mut deltas = format!("P,frame,ms,{delta_col}\n");
    for (p, r) in &report.rows {
        for (ms, e) in &r.testpoint_errors {
            let f = testpoint_frame(*ms, r.frame_ms)?;
            let _ = writeln!(rows, "{p},{f},{ms},{}", num(*e));
        }
    }
    for ((p, d), (_, r)) in report.deltas.iter().zip(&report.rows) {
        for (ms, e) in d {
            let f = testpoint_frame(*ms, r.frame_ms)?;
            let _ = writeln!(deltas, "{p},{f},{ms},{}", num(*e));
        }
    }
    let dpath = sibling(path, "deltas");
    write_file(path, &rows)?;
    write_file(&dpath, &deltas)?;
    Ok(vec![path.to_path_buf(), dpath])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::fp_loss_value;
    use crate::networks::NetShape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(r: usize, c: usize, seed: u64) -> Mat {
        Mat::uniform(r, c, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn identical_prediction_has_zero_error() {
        let x = rand_mat(6, 5, 0);
        assert_eq!(
            error_at_frames(&x, &x, Metric::Mpjpe).unwrap(),
            vec![0.0; 5]
        );
    }

    #[test]
    fn single_frame_offset() {
        let gt = rand_mat(6, 4, 1);
        let mut pred = gt.clone();
        pred[(0, 1)] += 3.0;
        pred[(1, 1)] += 4.0;
        let e = error_at_frames(&pred, &gt, Metric::Mpjpe).unwrap();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 2.5).abs() < 1e-12);
        assert_eq!(&e[2..], &[0.0, 0.0]);
        assert!(error_at_frames(&pred, &rand_mat(6, 3, 2), Metric::Mpjpe).is_err());
    }

    #[test]
    fn mean_per_frame_error_equals_fp_loss() {
        let pred = rand_mat(9, 12, 3);
        let gt = rand_mat(9, 10, 4);
        let e = error_at_frames(&pred.col_slice(0, 10).unwrap(), &gt, Metric::Mpjpe).unwrap();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        assert!((mean - fp_loss_value(&pred, &gt, Metric::Mpjpe).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn testpoint_frames_at_25_fps() {
        let expect = [
            (80, 2),
            (160, 4),
            (320, 8),
            (400, 10),
            (560, 14),
            (1000, 25),
        ];
        for (ms, f) in expect {
            assert_eq!(testpoint_frame(ms, 40.0).unwrap(), f);
        }
        assert!(matches!(testpoint_frame(70, 40.0), Err(Error::Config(_))));
        let per: Vec<f64> = (1..=25).map(|i| i as f64).collect();
        let tp = testpoints(&per, 40.0, &TESTPOINTS_MS).unwrap();
        assert_eq!(tp[&80], 2.0);
        assert_eq!(tp[&1000], 25.0);
        assert!(testpoints(&per[..10], 40.0, &[1000]).is_err());
        assert_eq!(horizons(10, 40.0), vec![80, 160, 320, 400]);
    }

    #[test]
    fn zero_velocity_matches_padding() {
        let frames = rand_mat(6, 9, 5);
        let w = MotionWindow::from_frames(&frames, 3, 4, 2, 40.0).unwrap();
        let zv = zero_velocity(&w);
        assert_eq!(zv, pad_observed(&w).unwrap().col_slice(3, 7).unwrap());
    }

    #[test]
    fn zero_velocity_is_exact_on_static_motion() {
        let w = MotionWindow::from_frames(&Mat::filled(6, 12, 0.4), 4, 6, 2, 40.0).unwrap();
        let cfg = TrainConfig {
            n: 4,
            t: 6,
            p: 2,
            ..TrainConfig::default()
        };
        let r = evaluate_baseline(&[w], &cfg, meta(&cfg, Stage::Tp)).unwrap();
        assert!(r.baseline.values().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_velocity_error_grows_on_smooth_motion() {
        let frames = Mat::from_fn(
            3,
            40,
            |k, n| if k == 0 { 0.0 } else { (n as f64 * 0.02).sin() },
        );
        let w = MotionWindow::from_frames(&frames, 10, 25, 5, 40.0).unwrap();
        let e = error_at_frames(&zero_velocity(&w), w.target(), Metric::Mpjpe).unwrap();
        assert!(e.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn zero_fp_network_equals_baseline() {
        let cfg = TrainConfig {
            n: 5,
            t: 10,
            p: 3,
            hidden: 4,
            ..TrainConfig::default()
        };
        let ws: Vec<_> = (0..3)
            .map(|s| MotionWindow::from_frames(&rand_mat(6, 18, s), 5, 10, 3, 40.0).unwrap())
            .collect();
        let fp = FpParams::zeros(NetShape {
            nodes: 6,
            coeffs: 18,
            hidden: 4,
        });
        let model = evaluate_fp(&fp, &ws, &cfg, meta(&cfg, Stage::Fp)).unwrap();
        let base = evaluate_baseline(&ws, &cfg, meta(&cfg, Stage::Tp)).unwrap();
        for (ms, v) in &model.testpoint_errors {
            assert!((v - base.testpoint_errors[ms]).abs() < 1e-10);
            assert!((v - model.baseline[ms]).abs() < 1e-10);
        }
    }

    fn report() -> EvalReport {
        EvalReport {
            n: 2,
            t: 3,
            p: 1,
            metric: Metric::Mpjpe,
            frame_ms: 40.0,
            per_frame_error: vec![0.0, 0.5, 1.0, 1.5, 2.25],
            testpoint_errors: BTreeMap::from([(80, 1.5)]),
            baseline: BTreeMap::from([(80, 3.0)]),
            meta: ReportMeta {
                seed: 1,
                stage: "fp".into(),
                checkpoint: String::new(),
            },
        }
    }

    #[test]
    fn report_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.csv");
        let written = emit_report(&report(), &path).unwrap();
        assert_eq!(written.len(), 3);
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            body,
            "frame,ms,error_mm\n-1,-40,0\n0,0,0.5\n1,40,1\n2,80,1.5\n3,120,2.25\n"
        );
        let tp = std::fs::read_to_string(dir.path().join("fp_testpoints.csv")).unwrap();
        assert_eq!(tp, "frame,ms,error_mm\n2,80,1.5\n");
        let again = dir.path().join("again.csv");
        emit_report(&report(), &again).unwrap();
        assert_eq!(
            std::fs::read(&again).unwrap(),
            std::fs::read(&path).unwrap()
        );
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let empty = SweepReport {
            rows: vec![],
            deltas: vec![],
        };
        emit_sweep(&empty, Metric::Mpjpe, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "P,frame,ms,error_mm\n"
        );
        assert_eq!(
            std::fs::read_to_string(dir.path().join("sweep_deltas.csv")).unwrap(),
            "P,frame,ms,delta_mm\n"
        );
    }
}
