use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default motion-capture rate (Hz).
pub const DEFAULT_SAMPLE_RATE: f64 = 250.0;
/// Minimum number of samples (0.1 s at 250 Hz) for a trajectory to be analysed.
pub const MIN_SAMPLES: usize = 25;

/// One motion-capture frame: time (s) and position (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Sample {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    fn position_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Which recorded axis points toward the targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthAxis {
    X,
    Y,
    #[default]
    Z,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "-z")]
    NegZ,
}

impl std::str::FromStr for DepthAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "x" => DepthAxis::X,
            "y" => DepthAxis::Y,
            "z" => DepthAxis::Z,
            "-x" => DepthAxis::NegX,
            "-y" => DepthAxis::NegY,
            "-z" => DepthAxis::NegZ,
            _ => {
                return Err(format!(
                    "unknown depth axis `{s}` (expected x, y, z, -x, -y or -z)"
                ))
            }
        })
    }
}

/// A sampled fingertip path for one trial. `z` is the depth axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    trial_id: u64,
    sample_rate: f64,
    samples: Vec<Sample>,
}

/// Outcome of checking the sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridCheck {
    Uniform,
    /// Longest run of missing samples found (gaps or non-finite positions).
    Gaps {
        longest: usize,
    },
}

impl Trajectory {
    /// Timestamps must be finite and strictly increasing.
    pub fn new(trial_id: u64, sample_rate: f64, samples: Vec<Sample>) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(
                "sample_rate",
                format!("must be positive, got {sample_rate}"),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.t.is_finite()) {
            return Err(Error::invalid(
                "t",
                format!("trial {trial_id}: non-finite timestamp at sample {i}"),
            ));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid(
                "t",
                format!(
                    "trial {trial_id}: timestamps must increase strictly (sample {})",
                    i + 1
                ),
            ));
        }
        Ok(Self {
            trial_id,
            sample_rate,
            samples,
        })
    }

    pub fn trial_id(&self) -> u64 {
        self.trial_id
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn axis(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }

    /// Copy with positions multiplied by `k` (timestamps untouched).
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| Sample::new(s.t, k * s.x, k * s.y, k * s.z))
                .collect(),
            ..self.clone()
        }
    }

    /// Samples `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            samples: self.samples[start..=end].to_vec(),
            ..self.clone()
        }
    }

    /// Rotates axes so the chosen depth axis becomes `+z`, keeping a
    /// right-handed frame.
    pub fn with_depth_axis(&self, axis: DepthAxis) -> Self {
        let map = |s: &Sample| -> Sample {
            let (x, y, z) = (s.x, s.y, s.z);
            let (nx, ny, nz) = match axis {
                DepthAxis::Z => (x, y, z),
                DepthAxis::NegZ => (-x, y, -z),
                DepthAxis::X => (-z, y, x),
                DepthAxis::NegX => (z, y, -x),
                DepthAxis::Y => (x, -z, y),
                DepthAxis::NegY => (x, z, -y),
            };
            Sample::new(s.t, nx, ny, nz)
        };
        Self {
            samples: self.samples.iter().map(map).collect(),
            ..self.clone()
        }
    }

    fn period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Checks timestamps against the nominal period (1 % tolerance) and
    /// counts missing frames, including frames with non-finite positions.
    pub fn check_grid(&self) -> Result<GridCheck> {
        let period = self.period();
        let mut present = Vec::with_capacity(self.samples.len());
        if let Some(first) = self.samples.first() {
            present.push(first.position_finite());
        }
        for (i, w) in self.samples.windows(2).enumerate() {
            let steps = (w[1].t - w[0].t) / period;
            let whole = steps.round();
            if whole < 1.0 || (steps - whole).abs() > 0.01 * whole {
                return Err(Error::invalid(
                    "t",
                    format!(
                        "trial {}: sample {} is off the {} Hz grid",
                        self.trial_id,
                        i + 1,
                        self.sample_rate
                    ),
                ));
            }
            present.extend(std::iter::repeat_n(false, whole as usize - 1));
            present.push(w[1].position_finite());
        }
        let longest = present.split(|&p| p).map(<[bool]>::len).max().unwrap_or(0);
        Ok(if longest == 0 {
            GridCheck::Uniform
        } else {
            GridCheck::Gaps { longest }
        })
    }

    /// Resamples onto the uniform grid, linearly interpolating missing frames.
    /// Fails if a run of more than `max_missing` frames is missing or if the
    /// first or last frame is missing.
    pub fn fill_gaps(&self, max_missing: usize) -> std::result::Result<Self, String> {
        let period = self.period();
        let finite: Vec<&Sample> = self
            .samples
            .iter()
            .filter(|s| s.position_finite())
            .collect();
        let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) else {
            return Err("empty trajectory".into());
        };
        if !first.position_finite() || !last.position_finite() {
            return Err("missing data at the start or end of the trial".into());
        }
        let t0 = first.t;
        let n = ((last.t - t0) / period).round() as usize + 1;
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let t = t0 + i as f64 * period;
            while k + 1 < finite.len() && finite[k + 1].t <= t + 0.01 * period {
                k += 1;
            }
            let a = finite[k];
            if (a.t - t).abs() <= 0.01 * period {
                out.push(Sample::new(a.t, a.x, a.y, a.z));
                continue;
            }
            let b = finite[k + 1];
            let missing = ((b.t - a.t) / period).round() as usize - 1;
            if missing > max_missing {
                return Err(format!(
                    "{missing} consecutive missing samples near t = {:.3} s",
                    a.t
                ));
            }
            let u = (t - a.t) / (b.t - a.t);
            out.push(Sample::new(
                t,
                a.x + u * (b.x - a.x),
                a.y + u * (b.y - a.y),
                a.z + u * (b.z - a.z),
            ));
        }
        Ok(Self {
            samples: out,
            ..self.clone()
        })
    }
}

#[derive(Debug, Deserialize)]
struct TrajectoryRow {
    trial_id: u64,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Reads a `trial_id,t,x,y,z` CSV (SI units) into trajectories ordered by
/// trial id. Rows of one trial need not be contiguous but must be in time order.
/// Empty or `NaN` coordinates mark missing frames.
pub fn read_trajectories_csv<R: Read>(
    input: R,
    source_name: &str,
    sample_rate: f64,
) -> Result<Vec<Trajectory>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(source_name, 1, e.to_string()))?
        .clone();
    let expected = ["trial_id", "t", "x", "y", "z"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(parse_error(
            source_name,
            1,
            format!("expected header {}", expected.join(",")),
        ));
    }
    let mut by_trial: BTreeMap<u64, Vec<Sample>> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                return Err(parse_error(source_name, line, e.to_string()));
            }
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| -> Result<f64> {
            let s = record.get(i).unwrap_or("");
            if s.is_empty() {
                return Ok(f64::NAN);
            }
            s.parse().map_err(|_| {
                parse_error(
                    source_name,
                    line,
                    format!("bad {} value {s:?}", expected[i]),
                )
            })
        };
        let row = TrajectoryRow {
            trial_id: record
                .get(0)
                .unwrap_or("")
                .parse()
                .map_err(|_| parse_error(source_name, line, "bad trial_id".into()))?,
            t: field(1)?,
            x: field(2)?,
            y: field(3)?,
            z: field(4)?,
        };
        if !row.t.is_finite() {
            return Err(parse_error(source_name, line, "missing timestamp".into()));
        }
        let samples = by_trial.entry(row.trial_id).or_default();
        if samples.last().is_some_and(|s| s.t >= row.t) {
            return Err(parse_error(
                source_name,
                line,
                format!("timestamps of trial {} must increase", row.trial_id),
            ));
        }
        samples.push(Sample::new(row.t, row.x, row.y, row.z));
    }
    by_trial
        .into_iter()
        .map(|(id, s)| Trajectory::new(id, sample_rate, s))
        .collect()
}

fn parse_error(source_name: &str, line: usize, message: String) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    }
}
