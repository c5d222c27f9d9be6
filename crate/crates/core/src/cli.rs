//! Command-line front end.
//!
//! Settings resolve in this order, later sources winning: built-in
//! defaults, the `--config` file, `PRIVMOTION_SEED`, then `--set` pairs and
//! dedicated flags in the order given.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{
    canonicalize, load_recordings, synth_generate, Recording, SynthSpec, MSEQ_EXT,
};
use crate::dct::FreqMatrix;
use crate::error::Error;
use crate::evaluation::{
    emit_report, emit_sweep, evaluate_baseline, evaluate_direct, evaluate_fp, evaluate_itp,
    pk_length_sweep, Corpus, ReportMeta,
};
use crate::tensor::{Mat, CHECKPOINT_EXT};
use crate::trainer::{self, load_checkpoint, save_checkpoint, Stage, TrainConfig, CONFIG_KEYS};

pub const SEED_ENV: &str = "PRIVMOTION_SEED";
pub const MANIFEST: &str = "manifest.txt";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CHECKPOINT: i32 = 4;

/// Everything a command reads: the training config plus paths and
/// command-specific options.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Frame rate recordings are resampled to.
    pub fps: f64,
    /// Offset between consecutive training windows.
    pub stride: usize,
    /// Defaults to `<out_dir>/itp.pkck`.
    pub itp_checkpoint: Option<PathBuf>,
    /// Checkpoint read by `eval` and `predict`; defaults to `<out_dir>/fp.pkck`.
    pub checkpoint: Option<PathBuf>,
    pub input: Option<PathBuf>,
    /// Defaults to `<out_dir>/forecast.mseq`.
    pub output: Option<PathBuf>,
    pub p_list: Vec<usize>,
    pub psl_weight: f64,
    pub synth_joints: usize,
    pub synth_frames: usize,
    pub synth_train: usize,
    pub synth_eval: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            fps: 25.0,
            stride: 10,
            itp_checkpoint: None,
            checkpoint: None,
            input: None,
            output: None,
            p_list: vec![0, 1, 5, 10],
            psl_weight: 0.6,
            synth_joints: 11,
            synth_frames: 200,
            synth_train: 8,
            synth_eval: 2,
        }
    }
}

pub const RUN_KEYS: &[&str] = &[
    "data_dir",
    "out_dir",
    "fps",
    "stride",
    "itp_checkpoint",
    "checkpoint",
    "input",
    "output",
    "p_list",
    "psl_weight",
    "synth_joints",
    "synth_frames",
    "synth_train",
    "synth_eval",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> crate::Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for key `{key}`")))
}

fn opt_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref()
        .map_or_else(String::new, |p| p.display().to_string())
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> crate::Result<()> {
        let v = value.trim();
        match key {
            "data_dir" => self.data_dir = PathBuf::from(v),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "fps" => self.fps = parse_num(key, v)?,
            "stride" => self.stride = parse_num(key, v)?,
            "itp_checkpoint" => self.itp_checkpoint = opt_path(v),
            "checkpoint" => self.checkpoint = opt_path(v),
            "input" => self.input = opt_path(v),
            "output" => self.output = opt_path(v),
            "p_list" => {
                self.p_list = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<crate::Result<_>>()?
            }
            "psl_weight" => self.psl_weight = parse_num(key, v)?,
            "synth_joints" => self.synth_joints = parse_num(key, v)?,
            "synth_frames" => self.synth_frames = parse_num(key, v)?,
            "synth_train" => self.synth_train = parse_num(key, v)?,
            "synth_eval" => self.synth_eval = parse_num(key, v)?,
            _ => self.train.set(key, v)?,
        }
        Ok(())
    }

    /// Applies a `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> crate::Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{origin}:{}: expected key=value, got `{line}`",
                    i + 1
                ))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("{origin}:{}: {}", i + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        let mut out = self.train.to_kv();
        let p_list: Vec<String> = self.p_list.iter().map(|p| p.to_string()).collect();
        let pairs = [
            ("data_dir", self.data_dir.display().to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("fps", format!("{:?}", self.fps)),
            ("stride", self.stride.to_string()),
            ("itp_checkpoint", show_path(&self.itp_checkpoint)),
            ("checkpoint", show_path(&self.checkpoint)),
            ("input", show_path(&self.input)),
            ("output", show_path(&self.output)),
            ("p_list", p_list.join(",")),
            ("psl_weight", format!("{:?}", self.psl_weight)),
            ("synth_joints", self.synth_joints.to_string()),
            ("synth_frames", self.synth_frames.to_string()),
            ("synth_train", self.synth_train.to_string()),
            ("synth_eval", self.synth_eval.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn itp_path(&self) -> PathBuf {
        self.itp_checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join(format!("itp.{CHECKPOINT_EXT}")))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint
            .clone()
            .unwrap_or_else(|| self.out_dir.join(format!("fp.{CHECKPOINT_EXT}")))
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Every key a config file may contain.
pub fn all_keys() -> Vec<&'static str> {
    CONFIG_KEYS.iter().chain(RUN_KEYS).copied().collect()
}

#[derive(Debug, Parser)]
#[command(
    name = "privmotion",
    version,
    about = "Motion prediction with privileged-knowledge distillation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Common {
    /// key=value config file (`#` starts a comment)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory holding train/ and eval/ recordings
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset under <data_dir>/train and <data_dir>/eval
    Synth(Common),
    /// Train the interpolation network on observed + privileged poses
    TrainItp(Common),
    /// Train the prediction network distilled from an ITP checkpoint
    TrainFp {
        #[command(flatten)]
        common: Common,
        /// ITP checkpoint (default <out_dir>/itp.pkck)
        #[arg(long, value_name = "FILE")]
        itp: Option<PathBuf>,
    },
    /// Train the prediction network without privileged knowledge
    TrainTp(Common),
    /// Train a single network that also scores the privileged window
    TrainPsl {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        psl_weight: Option<f64>,
    },
    /// Evaluate a checkpoint on <data_dir>/eval
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
    },
    /// Forecast the poses that follow an .mseq recording
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Train and evaluate once per privileged length
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated privileged lengths, must include 0
        #[arg(long, value_name = "LIST")]
        p_list: Option<String>,
    },
    /// Evaluate the zero-velocity baseline
    Baseline(Common),
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    msg: String,
}

type CliResult<T> = std::result::Result<T, Failure>;

fn classify(e: Error, fallback: i32) -> Failure {
    let code = match &e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Parse { .. } => EXIT_DATA,
        Error::Format { .. } | Error::Param(_) => EXIT_CHECKPOINT,
        _ => fallback,
    };
    Failure {
        code,
        msg: e.to_string(),
    }
}

fn general<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| classify(e, EXIT_FAILURE))
}

fn data<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| classify(e, EXIT_DATA))
}

fn ckpt<T>(r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| classify(e, EXIT_CHECKPOINT))
}

fn resolve(common: &Common, extra: &[(&str, Option<String>)]) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| Failure {
            code: EXIT_CONFIG,
            msg: format!("cannot read config file {}: {e}", path.display()),
        })?;
        general(cfg.apply_text(&text, &path.display().to_string()))?;
    }
    if let Ok(seed) = std::env::var(SEED_ENV) {
        general(
            cfg.set("seed", &seed)
                .map_err(|_| Error::Config(format!("{SEED_ENV}=`{seed}` is not an integer"))),
        )?;
    }
    for pair in &common.set {
        let (k, v) = pair.split_once('=').ok_or_else(|| Failure {
            code: EXIT_CONFIG,
            msg: format!("--set expects KEY=VALUE, got `{pair}`"),
        })?;
        general(cfg.set(k.trim(), v))?;
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    if let Some(d) = &common.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    for (k, v) in extra {
        if let Some(v) = v {
            general(cfg.set(k, v))?;
        }
    }
    general(cfg.train.validate())?;
    Ok(cfg)
}

fn path_arg(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        msg: format!("cannot write {}: {e}", path.display()),
    }
}

fn write_manifest(cfg: &RunConfig, command: &str) -> CliResult<()> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    let text = format!(
        "# privmotion {} {command}\n# re-run with: privmotion {command} --config {MANIFEST}\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_kv()
    );
    let path = dir.join(MANIFEST);
    std::fs::write(&path, text).map_err(|e| io_fail(&path, e))
}

fn load_split(cfg: &RunConfig, split: &str) -> CliResult<Vec<Recording>> {
    let dir = cfg.data_dir.join(split);
    let recs = data(load_recordings(&dir))?;
    if recs.is_empty() {
        return Err(Failure {
            code: EXIT_DATA,
            msg: format!("no .{MSEQ_EXT} recordings in {}", dir.display()),
        });
    }
    recs.iter()
        .map(|r| data(canonicalize(r, cfg.fps)))
        .collect()
}

fn load_corpus(cfg: &RunConfig) -> CliResult<Corpus> {
    Ok(Corpus {
        train: load_split(cfg, "train")?,
        eval: load_split(cfg, "eval")?,
        train_stride: cfg.stride,
    })
}

fn curve_csv(path: &Path, loss: &[f64], simu: &[f64]) -> CliResult<()> {
    let mut s = String::from(if simu.is_empty() {
        "epoch,loss\n"
    } else {
        "epoch,loss,simu\n"
    });
    for (i, l) in loss.iter().enumerate() {
        match simu.get(i) {
            Some(m) => writeln!(s, "{},{l},{m}", i + 1),
            None => writeln!(s, "{},{l}", i + 1),
        }
        .expect("writing to a String");
    }
    std::fs::write(path, s).map_err(|e| io_fail(path, e))
}

fn out_file(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn ckpt_file(cfg: &RunConfig, stage: Stage) -> PathBuf {
    out_file(cfg, &format!("{stage}.{CHECKPOINT_EXT}"))
}

fn cmd_synth(cfg: &RunConfig) -> CliResult<()> {
    if cfg.synth_joints < 2 || cfg.synth_frames == 0 {
        return Err(Failure {
            code: EXIT_CONFIG,
            msg: "synth_joints must be >= 2 and synth_frames >= 1".into(),
        });
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    for (split, count) in [("train", cfg.synth_train), ("eval", cfg.synth_eval)] {
        let dir = cfg.data_dir.join(split);
        std::fs::create_dir_all(&dir).map_err(|e| io_fail(&dir, e))?;
        for i in 0..count {
            let spec = SynthSpec {
                joints: cfg.synth_joints,
                frames: cfg.synth_frames,
                fps: cfg.fps,
                seed: seeds.gen(),
                ..SynthSpec::default()
            };
            let mut rec = synth_generate(&spec);
            rec.name = format!("synth_{split}_{i:03}");
            general(rec.save(&dir.join(format!("{}.{MSEQ_EXT}", rec.name))))?;
        }
    }
    Ok(())
}

fn cmd_train(cfg: &RunConfig, stage: Stage) -> CliResult<()> {
    let corpus = load_corpus(cfg)?;
    let tc = &cfg.train;
    let (train, _) = general(corpus.windows(tc, tc.p))?;
    let nodes = train[0].params();
    let path = ckpt_file(cfg, stage);
    let (loss, simu) = match stage {
        Stage::Itp => {
            let art = general(trainer::train_itp(&train, tc))?;
            general(save_checkpoint(
                &path,
                &art.params,
                stage,
                nodes,
                tc.epochs_itp,
                tc,
            ))?;
            (art.loss_curve, art.simu_curve)
        }
        Stage::Fp => {
            let itp_path = cfg.itp_path();
            if !itp_path.is_file() {
                return Err(Failure {
                    code: EXIT_CHECKPOINT,
                    msg: format!("ITP checkpoint not found: {}", itp_path.display()),
                });
            }
            let ck = ckpt(load_checkpoint(&itp_path))?;
            if ck.stage != Stage::Itp {
                return Err(Failure {
                    code: EXIT_CHECKPOINT,
                    msg: format!(
                        "{} holds a {} checkpoint, expected itp",
                        itp_path.display(),
                        ck.stage
                    ),
                });
            }
            let itp = ckpt(ck.into_itp())?;
            let art = general(trainer::train_fp(&train, Some(&itp), tc))?;
            general(save_checkpoint(
                &path,
                &art.params,
                stage,
                nodes,
                tc.epochs_fp,
                tc,
            ))?;
            (art.loss_curve, art.simu_curve)
        }
        Stage::Tp => {
            let art = general(trainer::train_tp(&train, tc))?;
            general(save_checkpoint(
                &path,
                &art.params,
                stage,
                nodes,
                tc.epochs_fp,
                tc,
            ))?;
            (art.loss_curve, art.simu_curve)
        }
        Stage::Psl => {
            let art = general(trainer::train_psl(&train, tc, cfg.psl_weight))?;
            general(save_checkpoint(
                &path,
                &art.params,
                stage,
                nodes,
                tc.epochs_fp,
                tc,
            ))?;
            (art.loss_curve, art.simu_curve)
        }
    };
    curve_csv(&out_file(cfg, &format!("{stage}_loss.csv")), &loss, &simu)
}

fn cmd_eval(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg.checkpoint_path();
    let ck = ckpt(load_checkpoint(&path))?;
    let tc = ck.config.clone();
    let corpus = load_corpus(cfg)?;
    let (_, eval) = general(corpus.windows(&tc, tc.p))?;
    let meta = ReportMeta {
        seed: tc.seed,
        stage: ck.stage.to_string(),
        checkpoint: path.display().to_string(),
    };
    let stage = ck.stage;
    let report = match stage {
        Stage::Itp => general(evaluate_itp(&ckpt(ck.into_itp())?, &eval, &tc, meta))?,
        Stage::Fp | Stage::Tp => general(evaluate_fp(&ckpt(ck.into_fp())?, &eval, &tc, meta))?,
        Stage::Psl => general(evaluate_direct(&ckpt(ck.into_direct())?, &eval, &tc, meta))?,
    };
    general(emit_report(
        &report,
        &out_file(cfg, &format!("eval_{stage}.csv")),
    ))?;
    Ok(())
}

fn cmd_predict(cfg: &RunConfig) -> CliResult<()> {
    let path = cfg.checkpoint_path();
    let ck = ckpt(load_checkpoint(&path))?;
    let tc = ck.config.clone();
    let input = cfg.input.clone().ok_or_else(|| Failure {
        code: EXIT_CONFIG,
        msg: "predict needs an input recording (--input or key `input`)".into(),
    })?;
    let mut recs = data(load_recordings(&input))?;
    if recs.len() != 1 {
        return Err(Failure {
            code: EXIT_DATA,
            msg: format!("{} must be a single .{MSEQ_EXT} file", input.display()),
        });
    }
    let rec = data(canonicalize(&recs.remove(0), cfg.fps))?;
    if rec.len() < tc.n || rec.params() != ck.nodes {
        return Err(Failure {
            code: EXIT_DATA,
            msg: format!(
                "{} has {}×{} values, need {} parameters and at least {} frames",
                input.display(),
                rec.params(),
                rec.len(),
                ck.nodes,
                tc.n
            ),
        });
    }
    let observed = general(rec.frames.col_slice(rec.len() - tc.n, rec.len()))?;
    let last = observed.col(tc.n - 1);
    let padded = general(observed.hcat(&Mat::from_fn(rec.params(), tc.t + tc.p, |i, _| last[i])))?;
    let basis = general(tc.basis())?;
    let h = general(basis.encode(&padded))?;
    let stage = ck.stage;
    let out: FreqMatrix = match stage {
        Stage::Fp | Stage::Tp => general(ckpt(ck.into_fp())?.predict(&h))?.0,
        Stage::Psl => general(ckpt(ck.into_direct())?.predict(&h))?,
        Stage::Itp => {
            return Err(Failure {
                code: EXIT_CHECKPOINT,
                msg: format!(
                    "{} is an itp checkpoint; predict needs fp, tp or psl",
                    path.display()
                ),
            })
        }
    };
    let seq = general(basis.decode(&out))?;
    let forecast = general(observed.hcat(&general(seq.col_slice(tc.n, tc.n + tc.t))?))?;
    let result = Recording {
        name: format!("{}_forecast", rec.name),
        fps: rec.fps,
        kind: rec.kind,
        frames: forecast,
    };
    let dest = cfg
        .output
        .clone()
        .unwrap_or_else(|| out_file(cfg, &format!("forecast.{MSEQ_EXT}")));
    general(result.save(&dest))
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load_corpus(cfg)?;
    let report = general(pk_length_sweep(&corpus, &cfg.train, &cfg.p_list))?;
    general(emit_sweep(
        &report,
        cfg.train.metric,
        &out_file(cfg, "sweep.csv"),
    ))?;
    Ok(())
}

fn cmd_baseline(cfg: &RunConfig) -> CliResult<()> {
    let corpus = load_corpus(cfg)?;
    let tc = &cfg.train;
    let (_, eval) = general(corpus.windows(tc, tc.p))?;
    let meta = ReportMeta {
        seed: tc.seed,
        stage: "zero-velocity".into(),
        checkpoint: String::new(),
    };
    let report = general(evaluate_baseline(&eval, tc, meta))?;
    general(emit_report(&report, &out_file(cfg, "zero_velocity.csv")))?;
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let (name, cfg) = match &cli.command {
        Command::Synth(c) => ("synth", resolve(c, &[])?),
        Command::TrainItp(c) => ("train-itp", resolve(c, &[])?),
        Command::TrainFp { common, itp } => (
            "train-fp",
            resolve(common, &[("itp_checkpoint", path_arg(itp))])?,
        ),
        Command::TrainTp(c) => ("train-tp", resolve(c, &[])?),
        Command::TrainPsl { common, psl_weight } => (
            "train-psl",
            resolve(
                common,
                &[("psl_weight", psl_weight.map(|w| format!("{w:?}")))],
            )?,
        ),
        Command::Eval { common, checkpoint } => (
            "eval",
            resolve(common, &[("checkpoint", path_arg(checkpoint))])?,
        ),
        Command::Predict {
            common,
            checkpoint,
            input,
            output,
        } => (
            "predict",
            resolve(
                common,
                &[
                    ("checkpoint", path_arg(checkpoint)),
                    ("input", path_arg(input)),
                    ("output", path_arg(output)),
                ],
            )?,
        ),
        Command::Sweep { common, p_list } => {
            ("sweep", resolve(common, &[("p_list", p_list.clone())])?)
        }
        Command::Baseline(c) => ("baseline", resolve(c, &[])?),
    };
    write_manifest(&cfg, name)?;
    log::info!(
        "{name}: out_dir={} seed={}",
        cfg.out_dir.display(),
        cfg.train.seed
    );
    match name {
        "synth" => cmd_synth(&cfg),
        "train-itp" => cmd_train(&cfg, Stage::Itp),
        "train-fp" => cmd_train(&cfg, Stage::Fp),
        "train-tp" => cmd_train(&cfg, Stage::Tp),
        "train-psl" => cmd_train(&cfg, Stage::Psl),
        "eval" => cmd_eval(&cfg),
        "predict" => cmd_predict(&cfg),
        "sweep" => cmd_sweep(&cfg),
        _ => cmd_baseline(&cfg),
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}
