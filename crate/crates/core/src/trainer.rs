//! Stage-wise training: the interpolation network first, then the prediction
//! network distilling the frozen privileged representation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dct::DctBasis;
use crate::error::{Error, Result};
use crate::gcn::Mode;
use crate::losses::{self, Metric};
use crate::networks::{
    DirectParams, FpParams, ItpParams, NetShape, ITP_OBS_WEIGHT, ITP_PRIV_WEIGHT,
};
use crate::preprocess::{pad_observed, pad_privileged, MotionWindow};
use crate::tensor::{Adam, Graph, Mat, ParamStore, Parameters};

const INIT_SALT: u64 = 0x1;
const SHUFFLE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const DROPOUT_SALT: u64 = 0xc2b2_ae3d_27d4_eb4f;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n: usize,
    pub t: usize,
    pub p: usize,
    /// DCT coefficients kept; `None` keeps all `N+T+P`.
    pub c: Option<usize>,
    pub hidden: usize,
    pub lr0: f64,
    pub decay: f64,
    pub decay_every: usize,
    pub dropout: f64,
    pub batch: usize,
    pub epochs_itp: usize,
    pub epochs_fp: usize,
    pub lambda: f64,
    pub clip_norm: f64,
    pub seed: u64,
    pub metric: Metric,
    /// Outer skip weights of the interpolation network.
    pub obs_weight: f64,
    pub priv_weight: f64,
    /// Initialize the prediction network's observation encoder and decoder
    /// from the trained interpolation network.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n: 10,
            t: 25,
            p: 10,
            c: None,
            hidden: 256,
            lr0: 0.0005,
            decay: 0.96,
            decay_every: 2,
            dropout: 0.5,
            batch: 16,
            epochs_itp: 50,
            epochs_fp: 50,
            lambda: losses::DEFAULT_LAMBDA,
            clip_norm: 1.0,
            seed: 0,
            metric: Metric::Mpjpe,
            obs_weight: ITP_OBS_WEIGHT,
            priv_weight: ITP_PRIV_WEIGHT,
            warm_start: false,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "n",
    "t",
    "p",
    "c",
    "hidden",
    "lr0",
    "decay",
    "decay_every",
    "dropout",
    "batch",
    "epochs_itp",
    "epochs_fp",
    "lambda",
    "clip_norm",
    "seed",
    "metric",
    "obs_weight",
    "priv_weight",
    "warm_start",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

impl TrainConfig {
    pub fn seq_len(&self) -> usize {
        self.n + self.t + self.p
    }

    pub fn coeffs(&self) -> usize {
        self.c.unwrap_or_else(|| self.seq_len())
    }

    pub fn basis(&self) -> Result<DctBasis> {
        DctBasis::new(self.seq_len(), self.coeffs())
    }

    pub fn net_shape(&self, nodes: usize) -> NetShape {
        NetShape {
            nodes,
            coeffs: self.coeffs(),
            hidden: self.hidden,
        }
    }

    /// `lr0 · decay^⌊epoch / decay_every⌋`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let k = epoch / self.decay_every.max(1);
        self.lr0 * self.decay.powi(k as i32)
    }

    /// Sets one field from its `key=value` spelling.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse(key, value)?,
            "t" => self.t = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "c" => {
                self.c = match value.trim() {
                    "" | "full" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "hidden" => self.hidden = parse(key, value)?,
            "lr0" => self.lr0 = parse(key, value)?,
            "decay" => self.decay = parse(key, value)?,
            "decay_every" => self.decay_every = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "batch" => self.batch = parse(key, value)?,
            "epochs_itp" => self.epochs_itp = parse(key, value)?,
            "epochs_fp" => self.epochs_fp = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "metric" => self.metric = value.trim().parse()?,
            "obs_weight" => self.obs_weight = parse(key, value)?,
            "priv_weight" => self.priv_weight = parse(key, value)?,
            "warm_start" => self.warm_start = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Canonical `key=value` lines in `CONFIG_KEYS` order. Floats use the
    /// shortest representation that round-trips.
    pub fn to_kv(&self) -> String {
        let c = self.c.map_or_else(|| "full".to_string(), |c| c.to_string());
        let pairs: [(&str, String); 19] = [
            ("n", self.n.to_string()),
            ("t", self.t.to_string()),
            ("p", self.p.to_string()),
            ("c", c),
            ("hidden", self.hidden.to_string()),
            ("lr0", format!("{:?}", self.lr0)),
            ("decay", format!("{:?}", self.decay)),
            ("decay_every", self.decay_every.to_string()),
            ("dropout", format!("{:?}", self.dropout)),
            ("batch", self.batch.to_string()),
            ("epochs_itp", self.epochs_itp.to_string()),
            ("epochs_fp", self.epochs_fp.to_string()),
            ("lambda", format!("{:?}", self.lambda)),
            ("clip_norm", format!("{:?}", self.clip_norm)),
            ("seed", self.seed.to_string()),
            ("metric", self.metric.to_string()),
            ("obs_weight", format!("{:?}", self.obs_weight)),
            ("priv_weight", format!("{:?}", self.priv_weight)),
            ("warm_start", self.warm_start.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.t == 0 {
            return bad(format!(
                "need n >= 1 and t >= 1, got n={} t={}",
                self.n, self.t
            ));
        }
        if let Some(c) = self.c {
            if c == 0 || c > self.seq_len() {
                return bad(format!("c={c} must be in 1..={}", self.seq_len()));
            }
        }
        if self.hidden == 0 || self.batch == 0 || self.decay_every == 0 {
            return bad("hidden, batch and decay_every must be >= 1".into());
        }
        if self.lr0.is_nan() || self.lr0 <= 0.0 {
            return bad(format!("lr0 must be positive, got {}", self.lr0));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.lambda < 0.0 {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Itp,
    Fp,
    Tp,
    Psl,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Itp => "itp",
            Stage::Fp => "fp",
            Stage::Tp => "tp",
            Stage::Psl => "psl",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "itp" => Ok(Stage::Itp),
            "fp" => Ok(Stage::Fp),
            "tp" => Ok(Stage::Tp),
            "psl" => Ok(Stage::Psl),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageArtifacts<P> {
    pub params: P,
    pub stage: Stage,
    /// Mean training loss per epoch (the loss actually minimized).
    pub loss_curve: Vec<f64>,
    /// Mean simulation loss per epoch; empty outside distillation.
    pub simu_curve: Vec<f64>,
    /// Learning rate used at every optimizer step.
    pub lr_trace: Vec<f64>,
}

/// Per-window tensors shared by every stage.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub h_obs: Mat,
    pub h_priv: Option<Mat>,
    /// All `N+T+P` true frames.
    pub gt_full: Mat,
    /// First `N+T` true frames.
    pub gt_scored: Mat,
}

pub fn prepare(
    windows: &[MotionWindow],
    cfg: &TrainConfig,
    basis: &DctBasis,
) -> Result<Vec<PreparedSample>> {
    windows
        .iter()
        .map(|w| {
            if (w.n(), w.t(), w.p()) != (cfg.n, cfg.t, cfg.p) {
                return Err(Error::Config(format!(
                    "window is {}-{}-{} but config is {}-{}-{}",
                    w.n(),
                    w.t(),
                    w.p(),
                    cfg.n,
                    cfg.t,
                    cfg.p
                )));
            }
            let h_obs = basis.encode(&pad_observed(w)?)?.into_mat();
            let h_priv = if w.p() > 0 {
                Some(basis.encode(&pad_privileged(w)?)?.into_mat())
            } else {
                None
            };
            Ok(PreparedSample {
                h_obs,
                h_priv,
                gt_full: w.full_sequence(),
                gt_scored: w.observed_and_target(),
            })
        })
        .collect()
}

struct StepOutput {
    loss: f64,
    simu: f64,
    grads: BTreeMap<String, Mat>,
}

/// Shared mini-batch loop. `sample_step` records one sample's loss on a fresh
/// graph and returns its gradients.
fn run_epochs<P, F>(
    params: &mut P,
    samples: usize,
    epochs: usize,
    cfg: &TrainConfig,
    salt: u64,
    mut sample_step: F,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)>
where
    P: Parameters,
    F: FnMut(&P, usize, &mut Mode<'_>) -> Result<StepOutput>,
{
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_SALT ^ salt);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ DROPOUT_SALT ^ salt);
    let mut adam = Adam::new();
    let mut order: Vec<usize> = (0..samples).collect();
    let mut loss_curve = Vec::with_capacity(epochs);
    let mut simu_curve = Vec::with_capacity(epochs);
    let mut lr_trace = Vec::new();

    for epoch in 0..epochs {
        let lr = cfg.lr_at(epoch);
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut simu_sum) = (0.0, 0.0);
        for batch in order.chunks(cfg.batch) {
            let mut acc: BTreeMap<String, Mat> = BTreeMap::new();
            for &idx in batch {
                let mut mode = Mode::Train {
                    dropout: cfg.dropout,
                    rng: &mut dropout_rng,
                };
                let out = sample_step(params, idx, &mut mode)?;
                if !out.loss.is_finite() {
                    return Err(Error::Contract(format!(
                        "non-finite loss at epoch {epoch}, sample {idx}"
                    )));
                }
                loss_sum += out.loss;
                simu_sum += out.simu;
                for (name, g) in out.grads {
                    match acc.get_mut(&name) {
                        Some(a) => a.add_assign(&g)?,
                        None => {
                            acc.insert(name, g);
                        }
                    }
                }
            }
            let inv = 1.0 / batch.len() as f64;
            for g in acc.values_mut() {
                for v in g.data_mut() {
                    *v *= inv;
                }
            }
            adam.step(params, &acc, lr, cfg.clip_norm)?;
            lr_trace.push(lr);
        }
        loss_curve.push(loss_sum / samples as f64);
        simu_curve.push(simu_sum / samples as f64);
    }
    Ok((loss_curve, simu_curve, lr_trace))
}

fn check_dataset(dataset: &[MotionWindow]) -> Result<usize> {
    let first = dataset
        .first()
        .ok_or_else(|| Error::Config("training set is empty".into()))?;
    let k = first.params();
    if dataset.iter().any(|w| w.params() != k) {
        return Err(Error::Config(
            "windows disagree on the pose parameter count K".into(),
        ));
    }
    Ok(k)
}

/// Stage one: interpolation from padded observed and privileged sequences.
pub fn train_itp(dataset: &[MotionWindow], cfg: &TrainConfig) -> Result<StageArtifacts<ItpParams>> {
    cfg.validate()?;
    if cfg.p == 0 {
        return Err(Error::Config(
            "ITP requires privileged poses (p >= 1)".into(),
        ));
    }
    let k = check_dataset(dataset)?;
    cfg.metric.check_params(k)?;
    let basis = cfg.basis()?;
    let samples = prepare(dataset, cfg, &basis)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_SALT);
    let mut params = ItpParams::init(cfg.net_shape(k), &mut init_rng);
    params.obs_weight = cfg.obs_weight;
    params.priv_weight = cfg.priv_weight;

    let (loss_curve, _, lr_trace) = run_epochs(
        &mut params,
        samples.len(),
        cfg.epochs_itp,
        cfg,
        0x17,
        |net, i, mode| {
            let s = &samples[i];
            let mut g = Graph::new();
            let ho = g.constant_ref(&s.h_obs);
            let hp = g.constant_ref(s.h_priv.as_ref().expect("p >= 1"));
            let (out, _) = net.forward(&mut g, ho, hp, mode)?;
            let b = g.constant_ref(basis.matrix());
            let seq = g.matmul(out, b)?;
            let gt = g.constant_ref(&s.gt_full);
            let loss = losses::loss_itp(&mut g, seq, gt, cfg.metric)?;
            Ok(StepOutput {
                loss: g.scalar(loss),
                simu: 0.0,
                grads: g.backward(loss)?.into_params(),
            })
        },
    )?;
    Ok(StageArtifacts {
        params,
        stage: Stage::Itp,
        loss_curve,
        simu_curve: Vec::new(),
        lr_trace,
    })
}

/// Stage two. With `itp = None` (or `lambda = 0`) this is plain prediction
/// training without privileged knowledge.
pub fn train_fp(
    dataset: &[MotionWindow],
    itp: Option<&ItpParams>,
    cfg: &TrainConfig,
) -> Result<StageArtifacts<FpParams>> {
    cfg.validate()?;
    let k = check_dataset(dataset)?;
    cfg.metric.check_params(k)?;
    let shape = cfg.net_shape(k);
    let basis = cfg.basis()?;
    let samples = prepare(dataset, cfg, &basis)?;

    let targets: Option<Vec<Mat>> = match itp {
        Some(itp) => {
            if itp.shape() != shape {
                return Err(Error::Config(format!(
                    "ITP network shape {:?} does not match config {:?}",
                    itp.shape(),
                    shape
                )));
            }
            if cfg.p == 0 {
                return Err(Error::Config(
                    "distillation requires privileged poses (p >= 1)".into(),
                ));
            }
            Some(
                samples
                    .iter()
                    .map(|s| {
                        let hp = s.h_priv.as_ref().expect("p >= 1");
                        itp.priv_enc.apply(hp)
                    })
                    .collect::<Result<_>>()?,
            )
        }
        None if cfg.lambda > 0.0 && cfg.p > 0 => {
            return Err(Error::Config(
                "lambda > 0 needs a trained ITP network; use lambda=0 for plain prediction".into(),
            ))
        }
        None => None,
    };

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_SALT ^ 0x2);
    let mut params = FpParams::init(shape, &mut init_rng);
    if let (Some(itp), true) = (itp, cfg.warm_start) {
        params.obs_enc = itp.obs_enc.with_prefix("fp.obs");
        params.dec = itp.dec.with_prefix("fp.dec");
    }
    let stage = if targets.is_some() {
        Stage::Fp
    } else {
        Stage::Tp
    };

    let (loss_curve, simu_curve, lr_trace) = run_epochs(
        &mut params,
        samples.len(),
        cfg.epochs_fp,
        cfg,
        0x2b,
        |net, i, mode| {
            let s = &samples[i];
            let mut g = Graph::new();
            let ho = g.constant_ref(&s.h_obs);
            let (out, sim) = net.forward(&mut g, ho, mode)?;
            let b = g.constant_ref(basis.matrix());
            let seq = g.matmul(out, b)?;
            let gt = g.constant_ref(&s.gt_scored);
            let fp = losses::loss_fp(&mut g, seq, gt, cfg.metric)?;
            let (loss, simu) = match &targets {
                Some(t) => {
                    let e = g.constant_ref(&t[i]);
                    let simu = losses::loss_simu(&mut g, sim, e)?;
                    (
                        losses::loss_total(&mut g, fp, simu, cfg.lambda)?,
                        g.scalar(simu),
                    )
                }
                None => (fp, 0.0),
            };
            Ok(StepOutput {
                loss: g.scalar(loss),
                simu,
                grads: g.backward(loss)?.into_params(),
            })
        },
    )?;
    Ok(StageArtifacts {
        params,
        stage,
        loss_curve,
        simu_curve: if targets.is_some() {
            simu_curve
        } else {
            Vec::new()
        },
        lr_trace,
    })
}

/// Plain prediction training (no privileged knowledge, `lambda = 0`).
pub fn train_tp(dataset: &[MotionWindow], cfg: &TrainConfig) -> Result<StageArtifacts<FpParams>> {
    let cfg = TrainConfig {
        lambda: 0.0,
        ..cfg.clone()
    };
    train_fp(dataset, None, &cfg)
}

/// Single network scored on the first `N+T` frames plus `psl_weight` times
/// its error inside the privileged window.
pub fn train_psl(
    dataset: &[MotionWindow],
    cfg: &TrainConfig,
    psl_weight: f64,
) -> Result<StageArtifacts<DirectParams>> {
    cfg.validate()?;
    if cfg.p == 0 {
        return Err(Error::Config(
            "privileged sequence loss requires p >= 1".into(),
        ));
    }
    if psl_weight < 0.0 {
        return Err(Error::Config(format!(
            "psl weight must be >= 0, got {psl_weight}"
        )));
    }
    let k = check_dataset(dataset)?;
    cfg.metric.check_params(k)?;
    let basis = cfg.basis()?;
    let samples = prepare(dataset, cfg, &basis)?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_SALT ^ 0x3);
    let mut params = DirectParams::init(cfg.net_shape(k), &mut init_rng);
    let (nt, len) = (cfg.n + cfg.t, cfg.seq_len());
    let privileged_gt: Vec<Mat> = samples
        .iter()
        .map(|s| s.gt_full.col_slice(nt, len))
        .collect::<Result<_>>()?;

    let (loss_curve, _, lr_trace) = run_epochs(
        &mut params,
        samples.len(),
        cfg.epochs_fp,
        cfg,
        0x3d,
        |net, i, mode| {
            let s = &samples[i];
            let mut g = Graph::new();
            let ho = g.constant_ref(&s.h_obs);
            let out = net.forward(&mut g, ho, mode)?;
            let b = g.constant_ref(basis.matrix());
            let seq = g.matmul(out, b)?;
            let gt = g.constant_ref(&s.gt_scored);
            let main = losses::loss_fp(&mut g, seq, gt, cfg.metric)?;
            let tail = g.col_slice(seq, nt, len)?;
            let tail_gt = g.constant_ref(&privileged_gt[i]);
            let psl = losses::pose_error(&mut g, tail, tail_gt, cfg.metric)?;
            let loss = g.affine_combine(1.0, main, psl_weight, psl)?;
            Ok(StepOutput {
                loss: g.scalar(loss),
                simu: 0.0,
                grads: g.backward(loss)?.into_params(),
            })
        },
    )?;
    Ok(StageArtifacts {
        params,
        stage: Stage::Psl,
        loss_curve,
        simu_curve: Vec::new(),
        lr_trace,
    })
}

/// A checkpoint read back from disk.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub store: ParamStore,
    pub stage: Stage,
    pub epoch: usize,
    /// Pose parameter count the weights were trained for.
    pub nodes: usize,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn into_itp(self) -> Result<ItpParams> {
        let mut p = ItpParams::zeros(self.config.net_shape(self.nodes));
        p.obs_weight = self.config.obs_weight;
        p.priv_weight = self.config.priv_weight;
        p.load_from(&self.store)?;
        Ok(p)
    }

    pub fn into_fp(self) -> Result<FpParams> {
        let mut p = FpParams::zeros(self.config.net_shape(self.nodes));
        p.load_from(&self.store)?;
        Ok(p)
    }

    pub fn into_direct(self) -> Result<DirectParams> {
        let shape = self.config.net_shape(self.nodes);
        let mut p = DirectParams::init(shape, &mut ChaCha8Rng::seed_from_u64(0));
        p.load_from(&self.store)?;
        Ok(p)
    }
}

pub fn save_checkpoint(
    path: &Path,
    params: &impl Parameters,
    stage: Stage,
    nodes: usize,
    epoch: usize,
    cfg: &TrainConfig,
) -> Result<()> {
    let trailer = format!(
        "stage={stage}\nepoch={epoch}\nnodes={nodes}\n{}",
        cfg.to_kv()
    );
    params.to_store().save(path, &trailer)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let (store, trailer) = ParamStore::load(path)?;
    parse_trailer(store, &trailer)
}

fn parse_trailer(store: ParamStore, trailer: &str) -> Result<Checkpoint> {
    let mut config = TrainConfig::default();
    let (mut stage, mut epoch, mut nodes) = (None, None, None);
    for line in trailer.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
            offset: 0,
            msg: format!("malformed trailer line `{line}`"),
        })?;
        match k {
            "stage" => stage = Some(v.parse()?),
            "epoch" => epoch = Some(parse("epoch", v)?),
            "nodes" => nodes = Some(parse("nodes", v)?),
            _ => config.set(k, v)?,
        }
    }
    let missing = |what: &str| Error::Format {
        offset: 0,
        msg: format!("checkpoint trailer lacks `{what}`"),
    };
    Ok(Checkpoint {
        store,
        stage: stage.ok_or_else(|| missing("stage"))?,
        epoch: epoch.ok_or_else(|| missing("epoch"))?,
        nodes: nodes.ok_or_else(|| missing("nodes"))?,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_generate, SynthSpec};
    use crate::preprocess::make_window_samples;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            n: 4,
            t: 3,
            p: 2,
            hidden: 8,
            batch: 4,
            epochs_itp: 3,
            epochs_fp: 3,
            dropout: 0.5,
            seed: 3,
            ..TrainConfig::default()
        }
    }

    fn windows(cfg: &TrainConfig, count: usize) -> Vec<MotionWindow> {
        let rec = synth_generate(&SynthSpec {
            joints: 3,
            frames: cfg.seq_len() + count - 1,
            seed: 11,
            ..SynthSpec::default()
        });
        make_window_samples(&rec.frames, cfg.n, cfg.t, cfg.p, 1, 40.0).unwrap()
    }

    #[test]
    fn lr_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr_at(0), 0.0005);
        assert_eq!(cfg.lr_at(1), 0.0005);
        assert!((cfg.lr_at(2) - 0.00048).abs() < 1e-18);
        assert!((cfg.lr_at(10) - 0.0005 * 0.96f64.powi(5)).abs() < 1e-18);
    }

    #[test]
    fn kv_roundtrip_and_unknown_keys() {
        let mut cfg = tiny_cfg();
        cfg.c = Some(7);
        cfg.metric = Metric::Mae;
        let mut back = TrainConfig::default();
        for line in cfg.to_kv().lines() {
            let (k, v) = line.split_once('=').unwrap();
            back.set(k, v).unwrap();
        }
        assert_eq!(back, cfg);
        assert!(matches!(
            back.set("learning_rate", "1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(back.set("batch", "x"), Err(Error::Config(_))));
        assert_eq!(cfg.to_kv().lines().count(), CONFIG_KEYS.len());
    }

    #[test]
    fn itp_needs_privileged_poses() {
        let cfg = TrainConfig { p: 0, ..tiny_cfg() };
        let ws = windows(&cfg, 2);
        let err = train_itp(&ws, &cfg).unwrap_err();
        assert!(err.to_string().contains("privileged"));
    }

    #[test]
    fn lr_trace_follows_schedule() {
        let cfg = TrainConfig {
            epochs_itp: 5,
            lr0: 0.01,
            ..tiny_cfg()
        };
        let ws = windows(&cfg, 9);
        let art = train_itp(&ws, &cfg).unwrap();
        // 9 samples, batch 4 → 3 steps per epoch, last batch kept
        assert_eq!(art.lr_trace.len(), 15);
        for (step, lr) in art.lr_trace.iter().enumerate() {
            assert_eq!(*lr, cfg.lr_at(step / 3));
        }
        assert_eq!(art.loss_curve.len(), 5);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = tiny_cfg();
        let ws = windows(&cfg, 6);
        let a = train_itp(&ws, &cfg).unwrap();
        let b = train_itp(&ws, &cfg).unwrap();
        assert_eq!(a.loss_curve, b.loss_curve);
        assert_eq!(a.params, b.params);
        let fa = train_fp(&ws, Some(&a.params), &cfg).unwrap();
        let fb = train_fp(&ws, Some(&b.params), &cfg).unwrap();
        assert_eq!(fa.params, fb.params);
        assert_eq!(fa.simu_curve, fb.simu_curve);
    }

    #[test]
    fn fp_leaves_itp_untouched() {
        let cfg = tiny_cfg();
        let ws = windows(&cfg, 5);
        let itp = train_itp(&ws, &cfg).unwrap().params;
        let before = itp.clone();
        train_fp(&ws, Some(&itp), &cfg).unwrap();
        assert_eq!(itp, before);
    }

    #[test]
    fn lambda_without_itp_is_rejected() {
        let cfg = tiny_cfg();
        let ws = windows(&cfg, 3);
        assert!(matches!(train_fp(&ws, None, &cfg), Err(Error::Config(_))));
        let tp = train_tp(&ws, &cfg).unwrap();
        assert_eq!(tp.stage, Stage::Tp);
        assert!(tp.simu_curve.is_empty());
    }

    #[test]
    fn mismatched_itp_shape_is_a_config_error() {
        let cfg = tiny_cfg();
        let ws = windows(&cfg, 3);
        let other = TrainConfig {
            hidden: 4,
            ..cfg.clone()
        };
        let itp = ItpParams::zeros(other.net_shape(9));
        assert!(matches!(
            train_fp(&ws, Some(&itp), &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn warm_start_copies_encoder_and_decoder() {
        let cfg = TrainConfig {
            warm_start: true,
            epochs_fp: 0,
            ..tiny_cfg()
        };
        let ws = windows(&cfg, 3);
        let itp = train_itp(&ws, &cfg).unwrap().params;
        let fp = train_fp(&ws, Some(&itp), &cfg).unwrap().params;
        assert_eq!(fp.obs_enc.layer_in, itp.obs_enc.layer_in);
        assert_eq!(fp.dec.layer_out, itp.dec.layer_out);
        assert!(fp.to_store().get("fp.obs.layer_in.A").is_some());
    }

    #[test]
    fn checkpoint_roundtrip_and_cross_stage() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg();
        let ws = windows(&cfg, 3);
        let itp = train_itp(&ws, &cfg).unwrap().params;
        let path = dir.path().join("itp.pkck");
        save_checkpoint(&path, &itp, Stage::Itp, 9, 3, &cfg).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.stage, Stage::Itp);
        assert_eq!(ck.config, cfg);
        assert_eq!(ck.epoch, 3);
        assert_eq!(ck.clone().into_itp().unwrap(), itp);
        let err = ck.into_fp().unwrap_err();
        assert!(matches!(err, Error::Param(_)), "{err}");
        assert!(err.to_string().contains("fp."));

        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn psl_weight_zero_ignores_tail() {
        let cfg = tiny_cfg();
        let ws = windows(&cfg, 4);
        let a = train_psl(&ws, &cfg, 0.0).unwrap();
        let b = train_psl(&ws, &cfg, 1.0).unwrap();
        assert_ne!(a.params, b.params);
        assert_eq!(a.stage, Stage::Psl);
        assert!(train_psl(
            &ws,
            &TrainConfig {
                p: 0,
                ..cfg.clone()
            },
            1.0
        )
        .is_err());
    }
}
