//! Skeleton recordings: the `.mseq` text format, canonicalization and a
//! seeded generator of smooth quasi-periodic motion.
//!
//! ```text
//! MSEQ1 positions 25 6 2
//! # comment lines start with '#'
//! 0.0 0.0 0.0 0.1 0.2 0.3
//! 0.0 0.0 0.0 0.1 0.2 0.4
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Mat;

pub const MSEQ_EXT: &str = "mseq";
const HEADER_TAG: &str = "MSEQ1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordingKind {
    Positions,
    Angles,
}

impl fmt::Display for RecordingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordingKind::Positions => "positions",
            RecordingKind::Angles => "angles",
        })
    }
}

impl FromStr for RecordingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "positions" => Ok(RecordingKind::Positions),
            "angles" => Ok(RecordingKind::Angles),
            other => Err(format!("unknown recording kind `{other}`")),
        }
    }
}

/// One action recording; `frames` is `K×L` (parameters × frames).
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub name: String,
    pub fps: f64,
    pub kind: RecordingKind,
    pub frames: Mat,
}

impl Recording {
    pub fn params(&self) -> usize {
        self.frames.rows()
    }

    pub fn len(&self) -> usize {
        self.frames.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.cols() == 0
    }

    pub fn frame_ms(&self) -> f64 {
        1000.0 / self.fps
    }

    pub fn to_mseq(&self) -> String {
        let mut out = format!(
            "{HEADER_TAG} {} {:?} {} {}\n",
            self.kind,
            self.fps,
            self.params(),
            self.len()
        );
        for n in 0..self.len() {
            let line: Vec<String> = (0..self.params())
                .map(|k| format!("{:.16e}", self.frames[(k, n)]))
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_mseq()).map_err(|e| Error::io(path, e))
    }
}

/// Parses `.mseq` text. `path` is only used in error messages.
pub fn parse_mseq(text: &str, path: &Path, name: &str) -> Result<Recording> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| perr(1, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != HEADER_TAG {
        return Err(perr(
            hline,
            format!("bad header `{header}`, expected `MSEQ1 <kind> <fps> <K> <L>`"),
        ));
    }
    let kind: RecordingKind = fields[1].parse().map_err(|m| perr(hline, m))?;
    let fps: f64 = fields[2]
        .parse()
        .map_err(|_| perr(hline, format!("bad fps `{}`", fields[2])))?;
    let k: usize = fields[3]
        .parse()
        .map_err(|_| perr(hline, format!("bad K `{}`", fields[3])))?;
    let l: usize = fields[4]
        .parse()
        .map_err(|_| perr(hline, format!("bad L `{}`", fields[4])))?;
    if !(fps.is_finite() && fps > 0.0) {
        return Err(perr(hline, format!("fps must be positive, got {fps}")));
    }
    if k == 0 || l == 0 {
        return Err(perr(hline, "K and L must be >= 1".into()));
    }
    if kind == RecordingKind::Positions && !k.is_multiple_of(3) {
        return Err(perr(
            hline,
            format!("positions need K divisible by 3, got {k}"),
        ));
    }

    let mut frames = Mat::zeros(k, l);
    let mut count = 0;
    for (lineno, line) in lines {
        if count == l {
            return Err(perr(lineno, format!("more than the declared {l} frames")));
        }
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != k {
            return Err(perr(
                lineno,
                format!("expected {k} values, found {}", values.len()),
            ));
        }
        for (j, v) in values.iter().enumerate() {
            let x: f64 = v
                .parse()
                .map_err(|_| perr(lineno, format!("bad number `{v}`")))?;
            if !x.is_finite() {
                return Err(perr(lineno, format!("non-finite value `{v}`")));
            }
            frames[(j, count)] = x;
        }
        count += 1;
    }
    if count != l {
        return Err(perr(
            text.lines().count(),
            format!("declared {l} frames, found {count}"),
        ));
    }
    Ok(Recording {
        name: name.to_string(),
        fps,
        kind,
        frames,
    })
}

fn load_file(path: &Path) -> Result<Recording> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_mseq(&text, path, &name)
}

/// Loads one `.mseq` file, or every `.mseq` file of a directory in
/// lexicographic file-name order.
pub fn load_recordings(path: &Path) -> Result<Vec<Recording>> {
    if path.is_file() {
        return Ok(vec![load_file(path)?]);
    }
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == MSEQ_EXT))
        .collect();
    files.sort();
    files.iter().map(|p| load_file(p)).collect()
}

/// Zeroes global translation (positions: the first joint is the root) and
/// downsamples to `target_fps` by keeping every `round(fps/target_fps)`-th frame.
///
/// Global rotation is left as is: removing it needs skeleton metadata the
/// format does not carry, and exported data usually arrives rotation-free.
pub fn canonicalize(r: &Recording, target_fps: f64) -> Result<Recording> {
    if target_fps.is_nan() || target_fps <= 0.0 || target_fps > r.fps + 1e-9 {
        return Err(Error::Config(format!(
            "cannot resample {} from {} fps to {target_fps} fps",
            r.name, r.fps
        )));
    }
    let step = ((r.fps / target_fps).round() as usize).max(1);
    let kept: Vec<usize> = (0..r.len()).step_by(step).collect();
    let k = r.params();
    let frames = Mat::from_fn(k, kept.len(), |i, j| {
        let n = kept[j];
        let v = r.frames[(i, n)];
        match r.kind {
            RecordingKind::Positions => v - r.frames[(i % 3, n)],
            RecordingKind::Angles => v,
        }
    });
    Ok(Recording {
        name: r.name.clone(),
        fps: r.fps / step as f64,
        kind: r.kind,
        frames,
    })
}

/// Parameters of the synthetic motion generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub joints: usize,
    pub frames: usize,
    pub fps: f64,
    /// Base frequencies (Hz) of the summed sinusoids.
    pub frequencies: Vec<f64>,
    /// Amplitude of each sinusoid, same length as `frequencies`.
    pub amplitudes: Vec<f64>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            joints: 11,
            frames: 200,
            fps: 25.0,
            frequencies: vec![0.5, 1.0, 1.7],
            amplitudes: vec![0.3, 0.15, 0.05],
            seed: 0,
        }
    }
}

const FREQ_JITTER: f64 = 0.1;
const DRIFT_FRACTION: f64 = 0.2;

impl SynthSpec {
    /// Upper bound on any coordinate's change between adjacent frames.
    pub fn max_step(&self) -> f64 {
        let waves: f64 = self
            .frequencies
            .iter()
            .zip(&self.amplitudes)
            .map(|(f, a)| a.abs() * 2.0 * PI * f.abs() * (1.0 + FREQ_JITTER))
            .sum();
        (waves + self.drift_scale()) / self.fps
    }

    fn drift_scale(&self) -> f64 {
        DRIFT_FRACTION * self.amplitudes.iter().fold(0.0f64, |m, a| m.max(a.abs()))
    }
}

/// Smooth multi-joint motion: joint 0 stays at the origin, every other
/// coordinate is a rest offset plus a seeded sum of sinusoids and a slow
/// linear drift. Phases are shared across joints up to a small offset, which
/// gives the coordinated, gait-like look of periodic actions.
pub fn synth_generate(spec: &SynthSpec) -> Recording {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let waves = spec.frequencies.len().min(spec.amplitudes.len());
    let freqs: Vec<f64> = spec.frequencies[..waves]
        .iter()
        .map(|f| f * (1.0 + rng.gen_range(-FREQ_JITTER..FREQ_JITTER)))
        .collect();
    let base_phase: Vec<f64> = (0..waves).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
    let drift = spec.drift_scale();
    let k = 3 * spec.joints;

    let mut frames = Mat::zeros(k, spec.frames);
    for row in 3..k {
        let rest = rng.gen_range(-1.0..1.0);
        let terms: Vec<(f64, f64, f64)> = (0..waves)
            .map(|i| {
                let amp = spec.amplitudes[i] * rng.gen_range(0.5..1.0);
                let phase = base_phase[i] + PI * ((row / 3) % 2) as f64 + rng.gen_range(-0.3..0.3);
                (amp, freqs[i], phase)
            })
            .collect();
        let slope = if drift > 0.0 {
            rng.gen_range(-drift..drift)
        } else {
            0.0
        };
        for n in 0..spec.frames {
            let t = n as f64 / spec.fps;
            let wave: f64 = terms
                .iter()
                .map(|(a, f, ph)| a * (2.0 * PI * f * t + ph).sin())
                .sum();
            frames[(row, n)] = rest + wave + slope * t;
        }
    }
    Recording {
        name: format!("synth_{}", spec.seed),
        fps: spec.fps,
        kind: RecordingKind::Positions,
        frames,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Recording {
        Recording {
            name: "s".into(),
            fps: 25.0,
            kind: RecordingKind::Positions,
            frames: Mat::from_rows(&[
                vec![0.1, 0.2],
                vec![-1.5, 1e-300],
                vec![std::f64::consts::PI, 2.0 / 3.0],
            ]),
        }
    }

    #[test]
    fn text_roundtrip() {
        let r = small();
        let back = parse_mseq(&r.to_mseq(), Path::new("x.mseq"), "s").unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let text = "MSEQ1 angles 25 2 2\n# c\n1 2\n3\n";
        match parse_mseq(text, Path::new("bad.mseq"), "bad") {
            Err(Error::Parse { line: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_and_value_errors() {
        let p = Path::new("e.mseq");
        assert!(matches!(
            parse_mseq("MSEQ2 angles 25 2 1\n1 2\n", p, "e"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mseq("MSEQ1 positions 25 2 1\n1 2\n", p, "e"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_mseq("MSEQ1 angles 25 2 1\n1 NaN\n", p, "e"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_mseq("MSEQ1 angles 25 2 2\n1 2\n", p, "e"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_mseq("MSEQ1 angles 25 1 1\n1\n2\n", p, "e"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn directory_loads_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        for (i, name) in ["b", "a", "c"].iter().enumerate() {
            let mut r = small();
            r.frames[(0, 0)] = i as f64;
            r.save(&dir.path().join(format!("{name}.mseq"))).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let recs = load_recordings(dir.path()).unwrap();
        let names: Vec<_> = recs.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        assert_eq!(recs, load_recordings(dir.path()).unwrap());
    }

    #[test]
    fn downsample_keeps_every_second_frame() {
        let r = Recording {
            name: "a".into(),
            fps: 50.0,
            kind: RecordingKind::Angles,
            frames: Mat::from_fn(2, 9, |i, j| (10 * i + j) as f64),
        };
        let c = canonicalize(&r, 25.0).unwrap();
        assert_eq!(c.fps, 25.0);
        assert_eq!(c.frames.row(0), &[0.0, 2.0, 4.0, 6.0, 8.0]);
        assert!(matches!(canonicalize(&r, 100.0), Err(Error::Config(_))));
    }

    #[test]
    fn root_is_origin_and_centered_data_is_unchanged() {
        let spec = SynthSpec {
            joints: 4,
            frames: 30,
            ..SynthSpec::default()
        };
        let mut r = synth_generate(&spec);
        let centered = canonicalize(&r, 25.0).unwrap();
        assert_eq!(centered, r);
        // translate the whole body and check it is removed again
        for n in 0..r.len() {
            for k in 0..r.params() {
                r.frames[(k, n)] += [3.0, -2.0, 0.5][k % 3] + n as f64;
            }
        }
        let c = canonicalize(&r, 25.0).unwrap();
        for n in 0..c.len() {
            assert_eq!(&c.frames.col(n)[..3], &[0.0, 0.0, 0.0]);
        }
        assert!(c.frames.max_abs_diff(&centered.frames) < 1e-12);
        assert_eq!(canonicalize(&c, 25.0).unwrap(), c);
    }

    #[test]
    fn zero_amplitude_is_constant() {
        let spec = SynthSpec {
            amplitudes: vec![0.0, 0.0, 0.0],
            frames: 20,
            ..SynthSpec::default()
        };
        let r = synth_generate(&spec);
        for k in 0..r.params() {
            assert!(r.frames.row(k).iter().all(|v| *v == r.frames[(k, 0)]));
        }
    }

    #[test]
    fn synth_is_deterministic_and_smooth() {
        let spec = SynthSpec {
            seed: 5,
            ..SynthSpec::default()
        };
        let a = synth_generate(&spec);
        assert_eq!(a, synth_generate(&spec));
        assert_ne!(
            a,
            synth_generate(&SynthSpec {
                seed: 6,
                ..spec.clone()
            })
        );
        let bound = spec.max_step();
        let mut largest = 0.0f64;
        for k in 0..a.params() {
            for n in 1..a.len() {
                largest = largest.max((a.frames[(k, n)] - a.frames[(k, n - 1)]).abs());
            }
        }
        assert!(largest <= bound, "{largest} > {bound}");
        assert!(largest > 0.1 * bound);
    }
}
